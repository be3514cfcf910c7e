use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use netgram_core::experiments::{records_csv, scaling_csv, summary_csv, Family};
use netgram_core::matrix::read_vector;
use netgram_core::{
    bottleneck_ratio, energy_bound, gramian, is_reversible, leading_eigenpair, min_energy_input, place_controls,
    run_ensemble, scaling_study, symmetrize, weighted_cut_bounds, ControlSystem, ExperimentConfig, GraphModel,
    GraphModelConfig, HorizonRule, Placement, Preset, Schedule, WeightMatrix, WeightMode,
};

const DEFAULT_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "netgram", version, about = "Energy-aware controllability of network systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a weighted random graph and write its matrices.
    Generate(GenerateArgs),
    /// Leading eigenvectors, σ₂ and heterogeneity of a matrix.
    Analyze(AnalyzeArgs),
    /// Gramian at a horizon, with minimum energy and the upper bound.
    Gramian(GramianArgs),
    /// Ingredients of the upper bound on λ_min.
    Bound(BoundArgs),
    /// Exhaustive bottleneck ratio and the Cheeger check.
    Cheeger(CheegerArgs),
    /// Seeded ensemble experiment written as CSV.
    Ensemble(EnsembleArgs),
    /// Log-bound against n under a control-count schedule.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Ba,
    Er,
    Kary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Symmetric,
    Asymmetric,
}

impl From<Weights> for WeightMode {
    fn from(w: Weights) -> Self {
        match w {
            Weights::Symmetric => WeightMode::Symmetric,
            Weights::Asymmetric => WeightMode::Asymmetric,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Node count (BA and ER).
    #[arg(long)]
    n: Option<usize>,
    /// Edges per new node (BA).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// ER edge probability is c·ln(n)/n.
    #[arg(long, default_value_t = 4.0)]
    c: f64,
    /// Side length (k-ary array).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 3)]
    dim: u32,
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    #[arg(long, default_value_t = 2.0)]
    b: f64,
    #[arg(long, value_enum, default_value_t = Weights::Symmetric)]
    weights: Weights,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file for the weight matrix C.
    #[arg(long)]
    out: PathBuf,
    /// Also write the column-stochastic A.
    #[arg(long)]
    stochastic: Option<PathBuf>,
    /// Also write the lazy A_α.
    #[arg(long)]
    lazy: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    matrix: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write v, w and π as CSV columns.
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Args)]
struct GramianArgs {
    matrix: PathBuf,
    /// Comma-separated 0-based nodes, or hcn, lcn or rn together with --m.
    #[arg(long)]
    controls: String,
    #[arg(long)]
    m: Option<usize>,
    /// Defaults to n.
    #[arg(long)]
    horizon: Option<usize>,
    /// Target state file (count line, then values).
    #[arg(long)]
    target: Option<PathBuf>,
    /// Seed for rn placement.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundArgs {
    matrix: PathBuf,
    #[arg(long)]
    m: usize,
}

#[derive(Args)]
struct CheegerArgs {
    matrix: PathBuf,
    /// Symmetric weight matrix C behind the walk; enables the weighted-cut bound.
    #[arg(long, requires_all = ["a", "b"])]
    weights: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "fig5_ba")]
    preset: Preset,
    /// Comma-separated node counts; defaults to the preset grid.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "NETGRAM_THREADS")]
    threads: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(self.preset);
        if let Some(grid) = &self.n_grid {
            cfg.n_grid = grid.clone();
        }
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        cfg.master_seed = self.seed;
        cfg.threads = self.threads;
        cfg
    }
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    run: RunArgs,
    /// n, converged, or a fixed positive integer.
    #[arg(long, default_value = "n")]
    horizon: String,
}

#[derive(Args)]
struct ScalingArgs {
    #[command(flatten)]
    run: RunArgs,
    /// const:M, sqrt, n_over_logn, n13_over_logn or linear_fraction:F.
    #[arg(long)]
    schedule: Schedule,
}

fn load(path: &Path) -> Result<WeightMatrix> {
    WeightMatrix::load(path).with_context(|| format!("reading matrix {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn generate(args: GenerateArgs) -> Result<()> {
    let need_n = || args.n.context("--n is required for this model");
    let model = match args.model {
        ModelKind::Ba => GraphModel::BarabasiAlbert { n: need_n()?, d: args.d },
        ModelKind::Er => GraphModel::ErdosRenyi { n: need_n()?, c: args.c },
        ModelKind::Kary => GraphModel::KAry { k: args.k.context("--k is required for kary")?, dim: args.dim },
    };
    let cfg = GraphModelConfig {
        model,
        weight_range: (args.a, args.b),
        weight_mode: args.weights.into(),
        alpha: args.alpha,
        seed: args.seed,
    };
    let r = cfg.realize()?;
    r.weights.save(&args.out)?;
    if let Some(p) = &args.stochastic {
        r.stochastic.save(p)?;
    }
    if let Some(p) = &args.lazy {
        r.lazy.save(p)?;
    }
    println!("model={model}\nn={}\nedges={}", model.n(), r.adjacency.as_matrix().iter().filter(|&&x| x > 0.0).count() / 2);
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let a = load(&args.matrix)?;
    let s = leading_eigenpair(&a, args.tol)?;
    let stochastic = a.is_column_stochastic(1e-9);
    let reversible = if stochastic { is_reversible(&a, &s, 1e-9)?.to_string() } else { "n/a".into() };
    println!("n={}", a.n());
    println!("lambda1={:.12e}", s.lambda1);
    println!("sigma1={:.12e}", s.sigma1());
    println!("sigma2={:.12e}", s.sigma2());
    println!("spectral_gap={:.12e}", s.spectral_gap());
    println!("heterogeneity={:.12e}", s.heterogeneity);
    println!("column_stochastic={stochastic}");
    println!("reversible={reversible}");
    if let Some(path) = &args.vectors {
        let mut out = String::from("node,v,w,pi\n");
        for i in 0..s.n() {
            let _ = writeln!(out, "{i},{:.16e},{:.16e},{:.16e}", s.v[i], s.w[i], s.pi[i]);
        }
        write(path, &out)?;
    }
    Ok(())
}

fn parse_controls(spec: &str, m: Option<usize>, a: &WeightMatrix, seed: u64) -> Result<Vec<usize>> {
    if let Ok(strategy) = spec.parse::<Placement>() {
        let m = m.context("--m is required with a placement strategy")?;
        let s = leading_eigenpair(a, DEFAULT_TOL)?;
        return Ok(place_controls(&s, m, strategy, seed)?);
    }
    spec.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad control node {t:?}")))
        .collect()
}

fn run_gramian(args: GramianArgs) -> Result<()> {
    let a = load(&args.matrix)?;
    let n = a.n();
    let controls = parse_controls(&args.controls, args.m, &a, args.seed)?;
    let m = controls.len();
    let horizon = args.horizon.unwrap_or(n);
    let sys = ControlSystem::new(a.clone(), controls.clone())?;
    let g = gramian(&sys, horizon)?;
    let list: Vec<String> = controls.iter().map(usize::to_string).collect();
    println!("controls={}", list.join(","));
    println!("horizon={horizon}");
    println!("lambda_min={:.12e}", g.lambda_min);
    if let Some(r) = g.lambda_min_restricted {
        println!("lambda_min_restricted={r:.12e}");
    }
    println!("max_energy={}", if g.lambda_min > 0.0 { format!("{:.12e}", 1.0 / g.lambda_min) } else { "inf".into() });
    if let Some(path) = &args.target {
        let target = read_vector(fs::File::open(path).with_context(|| format!("reading {}", path.display()))?)?;
        let u = min_energy_input(&sys, horizon, &target)?;
        println!("energy={:.12e}", u.energy);
    }
    match leading_eigenpair(&a, DEFAULT_TOL).and_then(|s| energy_bound(&s, n, m)) {
        Ok(b) => {
            println!("bound={:.12e}", b.value);
            println!("bound_ratio={}", if g.lambda_min > 0.0 { format!("{:.12e}", b.value / g.lambda_min) } else { "inf".into() });
        }
        Err(e) => println!("bound=undefined ({e})"),
    }
    Ok(())
}

fn bound(args: BoundArgs) -> Result<()> {
    let a = load(&args.matrix)?;
    let s = leading_eigenpair(&a, DEFAULT_TOL)?;
    let b = energy_bound(&s, a.n(), args.m)?;
    println!("heterogeneity={:.12e}", b.heterogeneity);
    println!("sigma2={:.12e}", b.sigma2);
    println!("exponent={:.12e}", b.exponent);
    println!("bound={:.12e}", b.value);
    println!("log_bound={:.12e}", b.ln_value());
    Ok(())
}

fn cheeger(args: CheegerArgs) -> Result<()> {
    let a = load(&args.matrix)?;
    let s = leading_eigenpair(&a, DEFAULT_TOL)?;
    let cut = bottleneck_ratio(&a, &s)?;
    let nodes: Vec<String> = cut.argmin.iter().map(usize::to_string).collect();
    println!("h={:.12e}", cut.h);
    println!("argmin={}", nodes.join(","));
    match symmetrize(&a, &s, 1e-9) {
        Ok(sym) => {
            println!("lambda2={:.12e}", sym.lambda2());
            println!("satisfied={}", sym.lambda2() <= cut.lambda2_bound + 1e-9);
        }
        Err(e) => println!("lambda2=undefined ({e})"),
    }
    println!("bound={:.12e}", cut.lambda2_bound);
    if let (Some(path), Some(lo), Some(hi)) = (&args.weights, args.a, args.b) {
        let c = load(path)?;
        let adj = WeightMatrix::new(c.as_matrix().map(|x| (x > 0.0) as u8 as f64))?;
        let wb = weighted_cut_bounds(&c, &adj, lo, hi)?;
        println!("h_lower={:.12e}", wb.h_lower);
    }
    Ok(())
}

fn parse_horizon(s: &str) -> Result<HorizonRule> {
    Ok(match s {
        "n" => HorizonRule::Nodes,
        "converged" => HorizonRule::Converged,
        t => HorizonRule::Fixed(t.parse().with_context(|| format!("bad horizon {t:?}"))?),
    })
}

fn summary_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".summary.csv");
    PathBuf::from(name)
}

fn ensemble(args: EnsembleArgs) -> Result<()> {
    let mut cfg = args.run.config();
    cfg.horizon = parse_horizon(&args.horizon)?;
    let out = run_ensemble(&cfg)?;
    write(&args.run.out, &records_csv(&out.records))?;
    write(&summary_path(&args.run.out), &summary_csv(&cfg, &out.summary))?;
    let failed = out.records.iter().filter(|r| !r.is_ok()).count();
    let audit_failures = out.audits.iter().filter(|a| !a.monotone()).count();
    println!("records={}", out.records.len());
    println!("failed={failed}");
    println!("horizon_audits={} (non-monotone {audit_failures})", out.audits.len());
    if audit_failures > 0 {
        bail!("λ_min decreased between T = n and T = 2n on {audit_failures} audited records");
    }
    Ok(())
}

fn scaling(args: ScalingArgs) -> Result<()> {
    let cfg = args.run.config();
    if let Family::Cube { .. } = cfg.family {
        if let Some(bad) = cfg.n_grid.iter().find(|&&n| cfg.family.model(n).is_err()) {
            bail!("cube grids need perfect cubes, got {bad}");
        }
    }
    let rows = scaling_study(&cfg, args.schedule)?;
    for r in rows.iter().filter(|r| r.clamped) {
        eprintln!("warning: schedule {} clamped to m = {} at n = {}", args.schedule, r.m, r.n);
    }
    write(&args.run.out, &scaling_csv(&cfg, args.schedule, &rows))?;
    println!("rows={}", rows.len());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Gramian(a) => run_gramian(a),
        Command::Bound(a) => bound(a),
        Command::Cheeger(a) => cheeger(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Scaling(a) => scaling(a),
    }
}
