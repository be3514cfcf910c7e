//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netgram_core::experiments::{slope_vs_log, Family};
use netgram_core::spectral::{check_contraction, project_out};
use netgram_core::{
    cheeger_gap_check, energy_bound, gramian, gramian_with_direction, lambda_metric, leading_eigenpair,
    min_energy_input, run_ensemble, scaling_study, spectral_norm, stability_report, weighted_cut_bounds,
    ControlSystem, ExperimentConfig, Placement, Preset, Schedule, SearchMode, WeightMatrix,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_controls(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let m = rng.random_range(1..=n);
    let mut k = rand::seq::index::sample(rng, n, m).into_vec();
    k.sort_unstable();
    k
}

fn symmetrized_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut cases, mut worst, mut gated) = (0, 0.0f64, 0);
    while cases < 300 {
        let n = rng.random_range(3..=30);
        let diag = rng.random::<bool>();
        let a = common::marginally_stable(&mut rng, n, diag);
        if !stability_report(&a, 1e-9).unwrap().marginally_stable {
            gated += 1;
            continue;
        }
        let s = leading_eigenpair(&a, 1e-12).unwrap();
        let l2 = s.lambda1 * s.lambda1;
        worst = worst.max((s.sigma1() - l2).abs() / l2.max(1.0));
        cases += 1;
    }
    outcome(
        worst <= 1e-9 && gated == 0,
        format!("{cases} matrices, max |σ₁ - λ₁²| / max(1, λ₁²) = {worst:.2e}, rejected by stability gate: {gated}"),
    )
}

fn bound_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut cases, mut violations, mut worst) = (0, 0, 0.0f64);
    while cases < 600 {
        let n = rng.random_range(3..=20);
        // a positive diagonal makes A Aᵀ primitive
        let a = common::marginally_stable(&mut rng, n, true);
        let s = leading_eigenpair(&a, 1e-12).unwrap();
        for _ in 0..3 {
            let k = random_controls(&mut rng, n);
            let t = rng.random_range(1..=3 * n);
            let Ok(bound) = energy_bound(&s, n, k.len()) else { continue };
            let sys = ControlSystem::new(a.clone(), k).unwrap();
            let lam = gramian_with_direction(&sys, t, None).unwrap().lambda_min;
            worst = worst.max(lam / bound.value);
            if lam > bound.value * (1.0 + 1e-9) {
                violations += 1;
            }
            cases += 1;
        }
    }
    let ring = WeightMatrix::from_rows(&[&[0.5, 0.0, 0.5], &[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5]]).unwrap();
    let rs = leading_eigenpair(&ring, 1e-12).unwrap();
    let rb = energy_bound(&rs, 3, 1).unwrap().value;
    let metric = lambda_metric(&ring, 1, SearchMode::Exhaustive { budget: 10 }).unwrap();
    let ring_ok = (rb - 1.0 / 3.0).abs() < 1e-10 && metric.value <= rb * (1.0 + 1e-9);
    outcome(
        violations == 0 && ring_ok,
        format!(
            "{cases} cases, {violations} violations, max λ_min / bound = {worst:.4}; lazy 3-ring bound = {rb:.12}, Λ = {:.6}",
            metric.value
        ),
    )
}

fn contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut cases, mut failures, mut worst) = (0, 0, 0.0f64);
    while cases < 500 {
        let n = rng.random_range(3..=25);
        let diag = rng.random::<bool>();
        let a = common::marginally_stable(&mut rng, n, diag);
        let s = leading_eigenpair(&a, 1e-12).unwrap();
        let y = project_out(&common::random_vector(&mut rng, n), &s.v);
        let t = rng.random_range(0..=20);
        let c = check_contraction(&a, &s, &y, t).unwrap();
        if c.rhs > 0.0 {
            worst = worst.max(c.lhs / c.rhs);
        }
        if !c.holds(1e-9) {
            failures += 1;
        }
        cases += 1;
    }
    outcome(failures == 0, format!("{cases} cases, {failures} failures, max lhs / rhs = {worst:.4}"))
}

fn gramian_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut recursion_err, mut duality_err, mut reach_err, mut energy_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut energy_cases = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let diag = rng.random::<bool>();
        let a = common::marginally_stable(&mut rng, n, diag);
        let k = random_controls(&mut rng, n);
        let t = rng.random_range(1..=30);
        let sys = ControlSystem::new(a.clone(), k.clone()).unwrap();
        let g = gramian_with_direction(&sys, t, None).unwrap();
        let oracle = common::gramian_by_definition(a.as_matrix(), &k, t);
        recursion_err = recursion_err.max((&g.w - &oracle).amax() / oracle.amax().max(1.0));

        if g.lambda_min < 1e-6 * g.w.amax() {
            continue;
        }
        energy_cases += 1;
        let eig = SymmetricEigen::new(g.w.clone());
        let imin = eig.eigenvalues.imin();
        let worst_target: DVector<f64> = eig.eigenvectors.column(imin).into();
        let e = min_energy_input(&sys, t, &worst_target).unwrap();
        duality_err = duality_err.max((e.energy * g.lambda_min - 1.0).abs());

        let target = common::random_vector(&mut rng, n);
        let u = min_energy_input(&sys, t, &target).unwrap();
        let reached = sys.simulate(&u.inputs);
        reach_err = reach_err.max((reached - &target).norm() / target.norm());
        let spent: f64 = u.inputs.iter().map(|x| x.norm_squared()).sum();
        let quad = target.dot(&g.w.clone().lu().solve(&target).unwrap());
        energy_err = energy_err.max((spent - quad).abs() / quad).max((u.energy - quad).abs() / quad);
    }

    let avg = ControlSystem::new(WeightMatrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap(), vec![0]).unwrap();
    let hand = gramian(&avg, 2).unwrap().lambda_min;
    let e1 = min_energy_input(&avg, 2, &DVector::from_vec(vec![1.0, 0.0])).unwrap().energy;
    let e2 = min_energy_input(&avg, 2, &DVector::from_vec(vec![0.0, 1.0])).unwrap().energy;
    let hand_ok = (hand - 0.19098).abs() <= 1e-5 && (e1 - 1.0).abs() <= 1e-6 && (e2 - 5.0).abs() <= 1e-6;
    outcome(
        recursion_err <= 1e-10 && duality_err <= 1e-8 && reach_err <= 1e-8 && energy_err <= 1e-8 && hand_ok,
        format!(
            "recursion {recursion_err:.1e}, duality {duality_err:.1e}, reach {reach_err:.1e}, energy {energy_err:.1e} over {energy_cases} controllable cases; 2x2: λ_min = {hand:.6}, energies {e1:.6} and {e2:.6}"
        ),
    )
}

fn degree_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut v_err, mut het_err, mut linear_violations) = (0.0f64, 0.0f64, 0);
    let cases = 200;
    for _ in 0..cases {
        let n = rng.random_range(4..=40);
        let (_, c) = common::symmetric_weights(&mut rng, n, 0.5, 4.0);
        let a = netgram_core::to_column_stochastic(&c).unwrap();
        let s = leading_eigenpair(&a, 1e-12).unwrap();
        let col = c.column_sums();
        let expected = &col / col.sum();
        v_err = v_err.max((&s.v - &expected).amax());
        let ratio = col.max() / col.min();
        het_err = het_err.max((s.heterogeneity - ratio).abs() / ratio);
        let (lo, hi) = netgram_core::graph::weight_extremes(&c);
        if s.heterogeneity > (n as f64 - 1.0) * hi / lo * (1.0 + 1e-12) {
            linear_violations += 1;
        }
    }
    outcome(
        v_err <= 1e-10 && het_err <= 1e-10 && linear_violations == 0,
        format!("{cases} pipelines, v error {v_err:.1e}, heterogeneity rel. error {het_err:.1e}, (n-1)c̄/c̲ violations {linear_violations}"),
    )
}

fn cheeger() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut cheeger_violations, mut chain_violations, mut slack) = (0, 0, f64::INFINITY);
    let cases = 200;
    for _ in 0..cases {
        let n = rng.random_range(4..=14);
        let (adj, c, walk) = common::reversible_walk(&mut rng, n);
        let s = leading_eigenpair(&walk, 1e-12).unwrap();
        let chk = cheeger_gap_check(&walk, &s).unwrap();
        slack = slack.min(chk.bound - chk.lambda2);
        if !chk.satisfied {
            cheeger_violations += 1;
        }
        let plain = netgram_core::to_column_stochastic(&c).unwrap();
        let ps = leading_eigenpair(&plain, 1e-12).unwrap();
        let h = netgram_core::bottleneck_ratio(&plain, &ps).unwrap().h;
        let wb = weighted_cut_bounds(&c, &adj, 0.5, 2.0).unwrap();
        if h < wb.h_lower * (1.0 - 1e-12) || wb.h_lower < 0.0 {
            chain_violations += 1;
        }
    }
    outcome(
        cheeger_violations == 0 && chain_violations == 0,
        format!("{cases} reversible walks (n <= 14), λ₂ <= 1 - h²/2 violations {cheeger_violations} (min slack {slack:.3e}), weighted-cut chain violations {chain_violations}"),
    )
}

fn non_normal_matrix() -> Outcome {
    let limit = (3.0 - 5f64.sqrt()) / 2.0;
    let mut bad = Vec::new();
    for i in 1..100 {
        let eps = limit * i as f64 / 100.0;
        let a = WeightMatrix::from_rows(&[&[eps, 1.0], &[eps, eps]]).unwrap();
        let stable = stability_report(&a, 1e-9).unwrap().strictly_stable;
        if !stable || spectral_norm(&a) <= 1.0 {
            bad.push(eps);
        }
    }
    let a = WeightMatrix::from_rows(&[&[0.1, 1.0], &[0.1, 0.1]]).unwrap();
    let norm = spectral_norm(&a);
    outcome(
        bad.is_empty() && (norm - 1.011).abs() <= 1e-3,
        format!("99 grid points in (0, (3-√5)/2), failures {bad:?}; ‖A_0.1‖₂ = {norm:.6}"),
    )
}

fn placement_trend() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut audit_violations = 0;
    for preset in [Preset::Fig5Er, Preset::Fig5Ba] {
        let out = run_ensemble(&ExperimentConfig::preset(preset)).unwrap();
        audit_violations += out
            .records
            .iter()
            .filter(|r| matches!((r.lambda_min, r.bound), (Some(l), Some(b)) if l > b * (1.0 + 1e-9)))
            .count();
        audit_violations += out.audits.iter().filter(|a| !a.monotone()).count();
        for &n in &out.config.n_grid {
            let mean = |p| out.summary_for(n, Some(p)).unwrap().lambda_min.unwrap();
            let (lcn, hcn) = (mean(Placement::Lcn), mean(Placement::Hcn));
            pass &= lcn.mean > hcn.mean;
            lines.push(format!(
                "{preset} n={n}: LCN {:.3e}±{:.1e} vs HCN {:.3e}±{:.1e}",
                lcn.mean, lcn.stderr, hcn.mean, hcn.stderr
            ));
        }
    }
    outcome(pass && audit_violations == 0, format!("{}; bound/horizon audit violations {audit_violations}", lines.join("; ")))
}

fn random_graph_trend() -> Outcome {
    let er = run_ensemble(&ExperimentConfig::preset(Preset::Fig4Er)).unwrap();
    let ns = er.config.n_grid.clone();
    let sigma: Vec<f64> = ns.iter().map(|&n| er.summary_for(n, None).unwrap().sigma2.mean).collect();
    let slope = slope_vs_log(&ns, &sigma);
    let er_ok = sigma.iter().all(|&s| s <= 0.99) && slope <= 0.005;

    let ba = run_ensemble(&ExperimentConfig::preset(Preset::Fig4Ba)).unwrap();
    let per_node: Vec<f64> =
        ns.iter().map(|&n| ba.summary_for(n, None).unwrap().heterogeneity.mean / n as f64).collect();
    let ba_ok = per_node.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        er_ok && ba_ok,
        format!("fig4_er mean σ₂ {sigma:.4?} (slope vs ln n {slope:.4}); fig4_ba heterogeneity/n {per_node:.4?}"),
    )
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn scaling() -> Outcome {
    let series = |preset, schedule| -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let rows = scaling_study(&ExperimentConfig::preset(preset), schedule).unwrap();
        (rows.iter().map(|r| r.n).collect(), rows.iter().map(|r| r.m).collect(), rows.iter().map(|r| r.log_bound.mean).collect())
    };
    let (ba_n, ba_m, ba) = series(Preset::ScalingBa, Schedule::Sqrt);
    let (cube_n, cube_m, cube) = series(Preset::ScalingCube, Schedule::N13OverLogN);
    let ba_ok = strictly_decreasing(&ba);
    let cube_ok = strictly_decreasing(&cube);

    // m = n: the exponent n/m is exactly 1 on every grid point
    let full = ExperimentConfig::preset(Preset::ScalingBa);
    let mut exponent_ok = true;
    for &n in &full.n_grid {
        let (m, _) = Schedule::LinearFraction(1.0).controls(n);
        let cfg = netgram_core::GraphModelConfig {
            model: Family::Ba { d: 2 }.model(n).unwrap(),
            weight_range: full.weight_range,
            weight_mode: full.weight_mode,
            alpha: full.alpha,
            seed: full.realization_seed(n, 0),
        };
        let s = leading_eigenpair(&cfg.realize().unwrap().lazy, 1e-12).unwrap();
        exponent_ok &= m == n && energy_bound(&s, n, m).unwrap().exponent == 1.0;
    }
    let fmt = |ns: &[usize], ms: &[usize], xs: &[f64]| {
        ns.iter().zip(ms).zip(xs).map(|((n, m), x)| format!("{n}(m={m}):{x:.3}")).collect::<Vec<_>>().join(" ")
    };
    outcome(
        ba_ok && cube_ok && exponent_ok,
        format!(
            "BA m=⌈√n⌉ [{}] {}; cube m=⌈n^(1/3)/ln n⌉ [{}] {}; m=n exponent 1: {}",
            fmt(&ba_n, &ba_m, &ba),
            if ba_ok { "decreasing" } else { "NOT strictly decreasing" },
            fmt(&cube_n, &cube_m, &cube),
            if cube_ok { "decreasing" } else { "NOT strictly decreasing" },
            exponent_ok
        ),
    )
}

fn strip_runtime(csv: &str) -> String {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head)).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Outcome {
    let run = |threads| {
        let cfg = ExperimentConfig {
            n_grid: vec![20, 40],
            realizations: 12,
            master_seed: 77,
            threads: Some(threads),
            ..ExperimentConfig::preset(Preset::Fig5Ba)
        };
        let out = run_ensemble(&cfg).unwrap();
        let scal = ExperimentConfig { threads: Some(threads), realizations: 8, ..ExperimentConfig::preset(Preset::ScalingEr) };
        let rows = scaling_study(&scal, Schedule::Sqrt).unwrap();
        (
            strip_runtime(&out.records_csv()),
            out.summary_csv(),
            netgram_core::experiments::scaling_csv(&scal, Schedule::Sqrt, &rows),
        )
    };
    let base = run(1);
    let mut identical = true;
    for threads in [1, 2, 4, 7] {
        identical &= run(threads) == base;
    }
    outcome(identical, format!("records, summary and scaling CSV identical across 1, 2, 4 and 7 threads: {identical}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("leading eigenvalue of the symmetrized product", symmetrized_identity),
        ("Gramian bound dominance", bound_dominance),
        ("contraction on the complement of v", contraction),
        ("Gramian oracle and minimum-energy input", gramian_oracle),
        ("degree-centrality identities", degree_identities),
        ("Cheeger inequality and weighted-cut chain", cheeger),
        ("stable matrix with norm above one", non_normal_matrix),
        ("placement trend LCN > HCN", placement_trend),
        ("random-graph spectral trends", random_graph_trend),
        ("log-bound scaling", scaling),
        ("determinism across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} ({:.1} s): {}",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
