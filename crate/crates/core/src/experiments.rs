//! Seeded random-graph ensembles: build lazy weighted walks, measure `σ₂`
//! and the heterogeneity index, place controllers by centrality, and record
//! `λ_min` of the Gramian next to its upper bound. Output is CSV.
//!
//! Every realization draws from its own stream derived from
//! `(master_seed, n, realization_index)`, and records are sorted before
//! writing, so the output does not depend on the thread count.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gramian::{
    energy_bound, gramian_until_converged, gramian_with_direction, ControlSystem, GramianResult,
};
use crate::graph::{GraphModel, GraphModelConfig, WeightMode};
use crate::rng::{derive_seed, stream};
use crate::spectral::{leading_eigenpair, SpectralData, DEFAULT_TOL};

pub const SCHEMA_VERSION: u32 = 1;
const MAX_FAILURE_RATE: f64 = 0.05;
/// One realization in `AUDIT_EVERY` also checks `λ_min(W(2n)) ≥ λ_min(W(n))`.
const AUDIT_EVERY: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig4Er,
    Fig4Ba,
    Fig5Er,
    Fig5Ba,
    ScalingBa,
    ScalingEr,
    ScalingCube,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Fig4Er,
        Preset::Fig4Ba,
        Preset::Fig5Er,
        Preset::Fig5Ba,
        Preset::ScalingBa,
        Preset::ScalingEr,
        Preset::ScalingCube,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4Er => "fig4_er",
            Preset::Fig4Ba => "fig4_ba",
            Preset::Fig5Er => "fig5_er",
            Preset::Fig5Ba => "fig5_ba",
            Preset::ScalingBa => "scaling_ba",
            Preset::ScalingEr => "scaling_er",
            Preset::ScalingCube => "scaling_cube",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown preset {s:?}")))
    }
}

/// Random-graph family; the node count comes from the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Ba { d: usize },
    Er { c: f64 },
    /// `n` must be a perfect `dim`-th power.
    Cube { dim: u32 },
}

impl Family {
    pub fn model(self, n: usize) -> Result<GraphModel> {
        match self {
            Family::Ba { d } => Ok(GraphModel::BarabasiAlbert { n, d }),
            Family::Er { c } => Ok(GraphModel::ErdosRenyi { n, c }),
            Family::Cube { dim } => {
                let k = (n as f64).powf(1.0 / dim as f64).round() as usize;
                if k.pow(dim) != n {
                    return Err(Error::Precondition(format!("{n} is not a perfect power of {dim}")));
                }
                Ok(GraphModel::KAry { k, dim })
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Ba { .. } => "ba",
            Family::Er { .. } => "er",
            Family::Cube { .. } => "kary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Placement {
    /// Highest centrality nodes.
    Hcn,
    /// Lowest centrality nodes.
    Lcn,
    /// Uniformly random nodes.
    Rn,
}

impl Placement {
    pub fn name(self) -> &'static str {
        match self {
            Placement::Hcn => "HCN",
            Placement::Lcn => "LCN",
            Placement::Rn => "RN",
        }
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hcn" => Ok(Placement::Hcn),
            "lcn" => Ok(Placement::Lcn),
            "rn" => Ok(Placement::Rn),
            _ => Err(Error::Precondition(format!("unknown placement {s:?}"))),
        }
    }
}

/// Control nodes chosen by `strategy`, ascending. HCN takes the `m` largest
/// `vᵢ`, LCN the `m` smallest (ties by ascending index in both), RN a
/// uniform subset drawn from `seed`.
pub fn place_controls(s: &SpectralData, m: usize, strategy: Placement, seed: u64) -> Result<Vec<usize>> {
    let n = s.n();
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need 1 <= m <= {n}, got {m}")));
    }
    let mut nodes = match strategy {
        Placement::Hcn => crate::graph::centrality_order(&s.v)[..m].to_vec(),
        Placement::Lcn => {
            let top = s.v.amax().max(f64::MIN_POSITIVE);
            let key = |i: usize| (s.v[i] / top * 1e10).round() as i64;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| (key(i), i));
            order[..m].to_vec()
        }
        Placement::Rn => sample(&mut stream(seed), n, m).into_vec(),
    };
    nodes.sort_unstable();
    Ok(nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizonRule {
    /// `T = n`.
    Nodes,
    Fixed(usize),
    /// Until the Gramian increment drops below `1e-10`, at most `50 n`.
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub family: Family,
    pub n_grid: Vec<usize>,
    pub realizations: usize,
    pub weight_range: (f64, f64),
    pub weight_mode: WeightMode,
    pub alpha: f64,
    /// Fraction of nodes actuated; `None` skips the Gramian.
    pub placement_fraction: Option<f64>,
    pub strategies: Vec<Placement>,
    pub horizon: HorizonRule,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        let fig4 = |family| ExperimentConfig {
            preset,
            family,
            n_grid: vec![100, 200, 400],
            realizations: 50,
            weight_range: (0.5, 4.0),
            weight_mode: WeightMode::Asymmetric,
            alpha: 0.5,
            placement_fraction: None,
            strategies: Vec::new(),
            horizon: HorizonRule::Nodes,
            master_seed: 0,
            threads: None,
        };
        let fig5 = |family| ExperimentConfig {
            n_grid: vec![30, 60, 90],
            weight_range: (0.5, 2.0),
            weight_mode: WeightMode::Symmetric,
            placement_fraction: Some(1.0 / 3.0),
            strategies: vec![Placement::Hcn, Placement::Lcn, Placement::Rn],
            ..fig4(family)
        };
        let scaling = |family, n_grid| ExperimentConfig {
            n_grid,
            placement_fraction: None,
            strategies: Vec::new(),
            ..fig5(family)
        };
        match preset {
            Preset::Fig4Er => fig4(Family::Er { c: 4.0 }),
            Preset::Fig4Ba => fig4(Family::Ba { d: 2 }),
            Preset::Fig5Er => fig5(Family::Er { c: 4.0 }),
            Preset::Fig5Ba | Preset::Custom => fig5(Family::Ba { d: 2 }),
            Preset::ScalingBa => scaling(Family::Ba { d: 2 }, vec![50, 100, 200, 400]),
            Preset::ScalingEr => scaling(Family::Er { c: 4.0 }, vec![50, 100, 200, 400]),
            Preset::ScalingCube => scaling(Family::Cube { dim: 3 }, vec![27, 64, 125, 216, 343, 512]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.realizations == 0 {
            return Err(Error::Precondition("need a nonempty n grid and at least one realization".into()));
        }
        if let Some(f) = self.placement_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Precondition(format!("placement fraction {f} outside (0, 1]")));
            }
        }
        if let HorizonRule::Fixed(0) = self.horizon {
            return Err(Error::Precondition("fixed horizon must be positive".into()));
        }
        for &n in &self.n_grid {
            self.graph_config(n, 0)?.validate()?;
        }
        Ok(())
    }

    fn graph_config(&self, n: usize, seed: u64) -> Result<GraphModelConfig> {
        Ok(GraphModelConfig {
            model: self.family.model(n)?,
            weight_range: self.weight_range,
            weight_mode: self.weight_mode,
            alpha: self.alpha,
            seed,
        })
    }

    pub fn realization_seed(&self, n: usize, index: usize) -> u64 {
        derive_seed(self.master_seed, &[n as u64, index as u64])
    }

    pub fn controls_for(&self, n: usize) -> Option<usize> {
        self.placement_fraction.map(|f| ((n as f64 * f).round() as usize).clamp(1, n))
    }

    fn horizon_for(&self, n: usize) -> usize {
        match self.horizon {
            HorizonRule::Nodes => n,
            HorizonRule::Fixed(t) => t,
            HorizonRule::Converged => 50 * n,
        }
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRecord {
    pub preset: Preset,
    pub model: &'static str,
    pub n: usize,
    pub realization_index: usize,
    pub seed: u64,
    /// `ok`, or a short error code for a failed realization.
    pub status: String,
    pub sigma2: Option<f64>,
    pub heterogeneity: Option<f64>,
    pub strategy: Option<Placement>,
    pub m: Option<usize>,
    pub lambda_min: Option<f64>,
    /// `het · σ₂^{n/m} / (σ₂² (1 - σ₂))` when defined.
    pub bound: Option<f64>,
    pub runtime_ms: f64,
}

impl EnsembleRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub strategy: Option<Placement>,
    pub count: usize,
    pub sigma2: Stat,
    pub heterogeneity: Stat,
    pub lambda_min: Option<Stat>,
    pub bound: Option<Stat>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Standard error of the mean; zero for a single sample.
    pub stderr: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let stderr = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, stderr })
    }
}

/// `λ_min` at `T = n` and `T = 2n` for one audited record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonAudit {
    pub n: usize,
    pub realization_index: usize,
    pub strategy: Placement,
    pub at_n: f64,
    pub at_2n: f64,
}

impl HorizonAudit {
    pub fn monotone(&self) -> bool {
        self.at_2n >= self.at_n * (1.0 - 1e-9) - 1e-15
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub config: ExperimentConfig,
    pub records: Vec<EnsembleRecord>,
    pub summary: Vec<SummaryRow>,
    pub audits: Vec<HorizonAudit>,
}

impl EnsembleOutput {
    pub fn summary_for(&self, n: usize, strategy: Option<Placement>) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.n == n && r.strategy == strategy)
    }

    pub fn records_csv(&self) -> String {
        records_csv(&self.records)
    }

    pub fn summary_csv(&self) -> String {
        summary_csv(&self.config, &self.summary)
    }
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::RejectionCap(_) => "rejection_cap",
        Error::NoConvergence { .. } => "no_convergence",
        Error::NotIrreducible => "not_irreducible",
        Error::NotPositiveSemidefinite { .. } => "not_psd",
        _ => "error",
    }
}

struct Realized {
    records: Vec<EnsembleRecord>,
    audits: Vec<HorizonAudit>,
}

fn run_one(cfg: &ExperimentConfig, n: usize, index: usize) -> Realized {
    let started = Instant::now();
    let seed = cfg.realization_seed(n, index);
    let base = EnsembleRecord {
        preset: cfg.preset,
        model: cfg.family.name(),
        n,
        realization_index: index,
        seed,
        status: "ok".into(),
        sigma2: None,
        heterogeneity: None,
        strategy: None,
        m: None,
        lambda_min: None,
        bound: None,
        runtime_ms: 0.0,
    };
    let fail = |e: Error, started: Instant| Realized {
        records: vec![EnsembleRecord {
            status: error_code(&e).into(),
            runtime_ms: started.elapsed().as_secs_f64() * 1e3,
            ..base.clone()
        }],
        audits: Vec::new(),
    };
    let analysed = cfg
        .graph_config(n, seed)
        .and_then(|g| g.realize())
        .and_then(|r| leading_eigenpair(&r.lazy, DEFAULT_TOL).map(|s| (r, s)));
    let (real, spec) = match analysed {
        Ok(x) => x,
        Err(e) => return fail(e, started),
    };
    let analysed_base = EnsembleRecord {
        sigma2: Some(spec.sigma2()),
        heterogeneity: Some(spec.heterogeneity),
        ..base.clone()
    };
    let Some(m) = cfg.controls_for(n) else {
        return Realized {
            records: vec![EnsembleRecord {
                runtime_ms: started.elapsed().as_secs_f64() * 1e3,
                ..analysed_base
            }],
            audits: Vec::new(),
        };
    };
    let bound = energy_bound(&spec, n, m).ok().map(|b| b.value);
    let mut records = Vec::new();
    let mut audits = Vec::new();
    for &strategy in &cfg.strategies {
        let t0 = Instant::now();
        let outcome = place_controls(&spec, m, strategy, derive_seed(seed, &[strategy as u64 + 1]))
            .and_then(|k| ControlSystem::new(real.lazy.clone(), k))
            .and_then(|sys| {
                let g = evaluate(cfg, &sys, &spec, n)?;
                if index % AUDIT_EVERY == 0 && cfg.horizon == HorizonRule::Nodes {
                    let twice = gramian_with_direction(&sys, 2 * n, None)?;
                    audits.push(HorizonAudit {
                        n,
                        realization_index: index,
                        strategy,
                        at_n: g.lambda_min,
                        at_2n: twice.lambda_min,
                    });
                }
                Ok(g)
            });
        let runtime_ms = t0.elapsed().as_secs_f64() * 1e3;
        records.push(match outcome {
            Ok(g) => EnsembleRecord {
                strategy: Some(strategy),
                m: Some(m),
                lambda_min: Some(g.lambda_min),
                bound,
                runtime_ms,
                ..analysed_base.clone()
            },
            Err(e) => EnsembleRecord {
                status: error_code(&e).into(),
                strategy: Some(strategy),
                m: Some(m),
                runtime_ms,
                ..analysed_base.clone()
            },
        });
    }
    Realized { records, audits }
}

fn evaluate(cfg: &ExperimentConfig, sys: &ControlSystem, spec: &SpectralData, n: usize) -> Result<GramianResult> {
    match cfg.horizon {
        HorizonRule::Converged => gramian_until_converged(sys, cfg.horizon_for(n), Some(&spec.v)),
        _ => gramian_with_direction(sys, cfg.horizon_for(n), None),
    }
}

/// Runs the ensemble described by `cfg`. Fails when more than 5% of the
/// realizations fail.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<EnsembleOutput> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.realizations).map(move |r| (n, r)))
        .collect();
    let results: Vec<Realized> =
        cfg.in_pool(|| tasks.par_iter().map(|&(n, r)| run_one(cfg, n, r)).collect())?;

    let failed = results.iter().filter(|r| r.records.iter().any(|x| !x.is_ok())).count();
    if failed as f64 > MAX_FAILURE_RATE * tasks.len() as f64 {
        return Err(Error::TooManyFailures { failed, total: tasks.len() });
    }

    let mut records: Vec<EnsembleRecord> = Vec::new();
    let mut audits = Vec::new();
    for r in results {
        records.extend(r.records);
        audits.extend(r.audits);
    }
    records.sort_by_key(|r| (r.n, r.realization_index, r.strategy));
    let summary = summarize(cfg, &records);
    Ok(EnsembleOutput { config: cfg.clone(), records, summary, audits })
}

fn summarize(cfg: &ExperimentConfig, records: &[EnsembleRecord]) -> Vec<SummaryRow> {
    let strategies: Vec<Option<Placement>> = if cfg.placement_fraction.is_some() {
        cfg.strategies.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        for &strategy in &strategies {
            let group: Vec<&EnsembleRecord> =
                records.iter().filter(|r| r.n == n && r.strategy == strategy && r.is_ok()).collect();
            let col = |f: fn(&EnsembleRecord) -> Option<f64>| -> Vec<f64> {
                group.iter().filter_map(|r| f(r)).collect()
            };
            let (Some(sigma2), Some(heterogeneity)) =
                (Stat::of(&col(|r| r.sigma2)), Stat::of(&col(|r| r.heterogeneity)))
            else {
                continue;
            };
            rows.push(SummaryRow {
                n,
                strategy,
                count: group.len(),
                sigma2,
                heterogeneity,
                lambda_min: Stat::of(&col(|r| r.lambda_min)),
                bound: Stat::of(&col(|r| r.bound)),
            });
        }
    }
    rows
}

/// Float with 12 significant digits; empty when absent.
fn num(x: Option<f64>) -> String {
    x.map(|x| format!("{x:.11e}")).unwrap_or_default()
}

pub const RECORD_COLUMNS: &str = "preset,model,n,realization_index,seed,status,sigma2,heterogeneity,strategy,m,lambda_min,bound,runtime_ms";

pub fn records_csv(records: &[EnsembleRecord]) -> String {
    let mut out = format!("#schema_version={SCHEMA_VERSION}\n{RECORD_COLUMNS}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            r.preset,
            r.model,
            r.n,
            r.realization_index,
            r.seed,
            r.status,
            num(r.sigma2),
            num(r.heterogeneity),
            r.strategy.map_or("none", Placement::name),
            r.m.map(|m| m.to_string()).unwrap_or_default(),
            num(r.lambda_min),
            num(r.bound),
            r.runtime_ms,
        );
    }
    out
}

pub const SUMMARY_COLUMNS: &str = "preset,model,n,strategy,count,sigma2_mean,sigma2_stderr,heterogeneity_mean,heterogeneity_stderr,lambda_min_mean,lambda_min_stderr,bound_mean,bound_stderr";

pub fn summary_csv(cfg: &ExperimentConfig, rows: &[SummaryRow]) -> String {
    let mut out = format!("#schema_version={SCHEMA_VERSION}\n{SUMMARY_COLUMNS}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            cfg.preset,
            cfg.family.name(),
            r.n,
            r.strategy.map_or("none", Placement::name),
            r.count,
            num(Some(r.sigma2.mean)),
            num(Some(r.sigma2.stderr)),
            num(Some(r.heterogeneity.mean)),
            num(Some(r.heterogeneity.stderr)),
            num(r.lambda_min.map(|s| s.mean)),
            num(r.lambda_min.map(|s| s.stderr)),
            num(r.bound.map(|s| s.mean)),
            num(r.bound.map(|s| s.stderr)),
        );
    }
    out
}

/// Number of control nodes as a function of the network size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Const(usize),
    /// `⌈√n⌉`.
    Sqrt,
    /// `⌈n / ln n⌉`.
    NOverLogN,
    /// `⌈n^{1/3} / ln n⌉`.
    N13OverLogN,
    /// `⌈f n⌉`.
    LinearFraction(f64),
}

impl Schedule {
    /// Schedule value before rounding up.
    fn raw(self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            Schedule::Const(m) => m as f64,
            Schedule::Sqrt => x.sqrt(),
            Schedule::NOverLogN => x / x.ln(),
            Schedule::N13OverLogN => x.cbrt() / x.ln(),
            Schedule::LinearFraction(f) => f * x,
        }
    }

    /// `(m, clamped)` with `m = ⌈raw⌉` forced into `[1, n]`; `clamped` is set
    /// when the unrounded value lies outside that range.
    pub fn controls(self, n: usize) -> (usize, bool) {
        let raw = self.raw(n);
        let m = (raw.ceil().max(1.0) as usize).min(n);
        (m, raw < 1.0 || raw > n as f64)
    }

    /// Schedules that grow slower than the uncontrollability threshold of
    /// the family, for which the log-bound should fall with `n`.
    pub fn is_sub_threshold(self, family: Family) -> bool {
        match (self, family) {
            (Schedule::LinearFraction(_), _) => false,
            (Schedule::NOverLogN, _) => false,
            (Schedule::Sqrt, Family::Cube { .. }) => false,
            _ => true,
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("unknown schedule {s:?}"));
        match s {
            "sqrt" => Ok(Schedule::Sqrt),
            "n_over_logn" => Ok(Schedule::NOverLogN),
            "n13_over_logn" => Ok(Schedule::N13OverLogN),
            _ => {
                if let Some(v) = s.strip_prefix("const:") {
                    v.parse().map(Schedule::Const).map_err(|_| bad())
                } else if let Some(v) = s.strip_prefix("linear_fraction:") {
                    v.parse().map(Schedule::LinearFraction).map_err(|_| bad())
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Const(m) => write!(f, "const:{m}"),
            Schedule::Sqrt => f.write_str("sqrt"),
            Schedule::NOverLogN => f.write_str("n_over_logn"),
            Schedule::N13OverLogN => f.write_str("n13_over_logn"),
            Schedule::LinearFraction(x) => write!(f, "linear_fraction:{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub m: usize,
    /// The schedule fell outside `[1, n]` and was clamped.
    pub clamped: bool,
    pub count: usize,
    /// Ensemble mean of `ln(het · σ₂^{n/m} / (σ₂² (1 - σ₂)))`.
    pub log_bound: Stat,
    pub sigma2: Stat,
    pub heterogeneity: Stat,
}

/// Mean log of the energy bound per grid point under an `m(n)` schedule.
pub fn scaling_study(cfg: &ExperimentConfig, schedule: Schedule) -> Result<Vec<ScalingRow>> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.realizations).map(move |r| (n, r)))
        .collect();
    let outcomes: Vec<Result<(f64, f64, f64)>> = cfg.in_pool(|| {
        tasks
            .par_iter()
            .map(|&(n, r)| {
                let real = cfg.graph_config(n, cfg.realization_seed(n, r))?.realize()?;
                let spec = leading_eigenpair(&real.lazy, DEFAULT_TOL)?;
                let (m, _) = schedule.controls(n);
                let b = energy_bound(&spec, n, m)?;
                Ok((b.ln_value(), b.sigma2, b.heterogeneity))
            })
            .collect()
    })?;
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if failed as f64 > MAX_FAILURE_RATE * tasks.len() as f64 {
        return Err(Error::TooManyFailures { failed, total: tasks.len() });
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let ok: Vec<(f64, f64, f64)> = tasks
            .iter()
            .zip(&outcomes)
            .filter(|((tn, _), _)| *tn == n)
            .filter_map(|(_, o)| o.as_ref().ok().copied())
            .collect();
        let pick = |f: fn(&(f64, f64, f64)) -> f64| ok.iter().map(f).collect::<Vec<_>>();
        let (Some(log_bound), Some(sigma2), Some(heterogeneity)) =
            (Stat::of(&pick(|x| x.0)), Stat::of(&pick(|x| x.1)), Stat::of(&pick(|x| x.2)))
        else {
            continue;
        };
        let (m, clamped) = schedule.controls(n);
        rows.push(ScalingRow { n, m, clamped, count: ok.len(), log_bound, sigma2, heterogeneity });
    }
    Ok(rows)
}

pub const SCALING_COLUMNS: &str = "preset,model,schedule,n,m,clamped,count,log_bound_mean,log_bound_stderr,sigma2_mean,heterogeneity_mean";

pub fn scaling_csv(cfg: &ExperimentConfig, schedule: Schedule, rows: &[ScalingRow]) -> String {
    let mut out = format!("#schema_version={SCHEMA_VERSION}\n{SCALING_COLUMNS}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            cfg.preset,
            cfg.family.name(),
            schedule,
            r.n,
            r.m,
            r.clamped,
            r.count,
            num(Some(r.log_bound.mean)),
            num(Some(r.log_bound.stderr)),
            num(Some(r.sigma2.mean)),
            num(Some(r.heterogeneity.mean)),
        );
    }
    out
}

/// Least-squares slope of `ys` against `ln xs`.
pub fn slope_vs_log(xs: &[usize], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|&x| (x as f64).ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let cov: f64 = lx.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}
