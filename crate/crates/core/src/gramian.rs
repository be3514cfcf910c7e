//! Controllability Gramian `W_K(T) = Σ_{τ<T} A^τ B Bᵀ (Aᵀ)^τ` for input
//! matrices that actuate a set of nodes directly, minimum-energy inputs,
//! the centrality-based upper bound on `λ_min(W_K(T))`, and the
//! controllability degree `Λ(A, m) = max_{K, T} λ_min(W_K(T))`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{is_irreducible, WeightMatrix};
use crate::spectral::{leading_eigenpair, SpectralData, DEFAULT_TOL};

/// Network matrix plus the ordered set of directly actuated nodes
/// (0-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSystem {
    a: WeightMatrix,
    controls: Vec<usize>,
}

impl ControlSystem {
    pub fn new(a: WeightMatrix, controls: Vec<usize>) -> Result<Self> {
        let n = a.n();
        if controls.is_empty() || controls.len() > n {
            return Err(Error::Precondition(format!(
                "need 1 <= m <= {n} control nodes, got {}",
                controls.len()
            )));
        }
        let mut seen = vec![false; n];
        for &k in &controls {
            if k >= n || std::mem::replace(&mut seen[k], true) {
                return Err(Error::Precondition(format!(
                    "control node {k} is out of range or repeated"
                )));
            }
        }
        Ok(Self { a, controls })
    }

    pub fn matrix(&self) -> &WeightMatrix {
        &self.a
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn m(&self) -> usize {
        self.controls.len()
    }

    /// `B_K = [e_{k1} ... e_{km}]`.
    pub fn input_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n(), self.m());
        for (col, &k) in self.controls.iter().enumerate() {
            b[(k, col)] = 1.0;
        }
        b
    }

    /// Propagates `x(t+1) = A x(t) + B u(t)` from `x(0) = 0`.
    pub fn simulate(&self, inputs: &[DVector<f64>]) -> DVector<f64> {
        let a = self.a.as_matrix();
        let mut x = DVector::zeros(self.n());
        for u in inputs {
            x = a * x;
            for (col, &k) in self.controls.iter().enumerate() {
                x[k] += u[col];
            }
        }
        x
    }
}

/// Increments below this (max-norm) mark the Gramian as converged.
const CONVERGED_TOL: f64 = 1e-10;

/// Runs the recursion `W(t+1) = A W(t) Aᵀ + B Bᵀ` from `W(0) = 0`.
struct GramianRecursion<'a> {
    a: &'a DMatrix<f64>,
    at: DMatrix<f64>,
    controls: &'a [usize],
    w: DMatrix<f64>,
    horizon: usize,
    last_increment: f64,
}

impl<'a> GramianRecursion<'a> {
    fn new(a: &'a DMatrix<f64>, controls: &'a [usize]) -> Self {
        let n = a.nrows();
        Self {
            a,
            at: a.transpose(),
            controls,
            w: DMatrix::zeros(n, n),
            horizon: 0,
            last_increment: f64::INFINITY,
        }
    }

    fn step(&mut self) {
        let mut next = self.a * &self.w * &self.at;
        for &k in self.controls {
            next[(k, k)] += 1.0;
        }
        next = (&next + next.transpose()) * 0.5;
        self.last_increment = (&next - &self.w).amax();
        self.w = next;
        self.horizon += 1;
    }
}

fn min_eigenvalue(w: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(w.clone()).eigenvalues.min().max(0.0)
}

/// Orthonormal basis (as columns) of the complement of `v`, by modified
/// Gram-Schmidt on the unit vectors other than the one most aligned with `v`.
pub fn orthogonal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let skip = v.iamax();
    let mut basis: Vec<DVector<f64>> = vec![v.normalize()];
    for k in (0..n).filter(|&k| k != skip) {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&e);
                e.axpy(-c, q, 1.0);
            }
        }
        basis.push(e.normalize());
    }
    DMatrix::from_columns(&basis[1..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianResult {
    pub w: DMatrix<f64>,
    pub horizon: usize,
    pub lambda_min: f64,
    /// Minimum of `xᵀ W x` over unit `x ⊥ v`; present when `v` is known.
    pub lambda_min_restricted: Option<f64>,
    /// `‖W(T) - W(T-1)‖_max` fell below `1e-10`.
    pub converged: bool,
}

fn finish(rec: GramianRecursion<'_>, v: Option<&DVector<f64>>) -> GramianResult {
    let lambda_min = min_eigenvalue(&rec.w);
    let lambda_min_restricted = v.filter(|v| v.len() > 1).map(|v| {
        let p = orthogonal_complement(v);
        let compressed = p.transpose() * &rec.w * &p;
        min_eigenvalue(&((&compressed + compressed.transpose()) * 0.5))
    });
    GramianResult {
        converged: rec.last_increment < CONVERGED_TOL,
        w: rec.w,
        horizon: rec.horizon,
        lambda_min,
        lambda_min_restricted,
    }
}

/// Gramian at horizon `T` using a known leading right eigenvector `v` for the
/// restricted minimum.
pub fn gramian_with_direction(
    sys: &ControlSystem,
    horizon: usize,
    v: Option<&DVector<f64>>,
) -> Result<GramianResult> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    if let Some(v) = v {
        if v.len() != sys.n() {
            return Err(Error::Precondition("direction has the wrong length".into()));
        }
    }
    let mut rec = GramianRecursion::new(sys.a.as_matrix(), &sys.controls);
    for _ in 0..horizon {
        rec.step();
    }
    Ok(finish(rec, v))
}

/// Gramian at horizon `T`. The restricted minimum is filled in when `A` is
/// irreducible (so that its Perron vector exists).
pub fn gramian(sys: &ControlSystem, horizon: usize) -> Result<GramianResult> {
    let v = if is_irreducible(&sys.a) {
        Some(leading_eigenpair(&sys.a, DEFAULT_TOL)?.v)
    } else {
        None
    };
    gramian_with_direction(sys, horizon, v.as_ref())
}

/// Runs the recursion until `‖W(T) - W(T-1)‖_max < 1e-10` or `max_horizon`.
pub fn gramian_until_converged(
    sys: &ControlSystem,
    max_horizon: usize,
    v: Option<&DVector<f64>>,
) -> Result<GramianResult> {
    if max_horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let mut rec = GramianRecursion::new(sys.a.as_matrix(), &sys.controls);
    while rec.horizon < max_horizon {
        rec.step();
        if rec.last_increment < CONVERGED_TOL {
            break;
        }
    }
    Ok(finish(rec, v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinEnergyInput {
    /// `u*(0), ..., u*(T-1)`, each of length `m`.
    pub inputs: Vec<DVector<f64>>,
    /// `x_fᵀ W⁻¹ x_f`.
    pub energy: f64,
}

/// Least-norm input steering `x(0) = 0` to `x(T) = x_f`:
/// `u*(τ) = Bᵀ (Aᵀ)^{T-1-τ} W⁻¹ x_f`.
pub fn min_energy_input(
    sys: &ControlSystem,
    horizon: usize,
    target: &DVector<f64>,
) -> Result<MinEnergyInput> {
    if target.len() != sys.n() {
        return Err(Error::Precondition("target state has the wrong length".into()));
    }
    let g = gramian_with_direction(sys, horizon, None)?;
    let eig = SymmetricEigen::new(g.w.clone());
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > 1e-12 * hi) {
        return Err(Error::Uncontrollable { horizon, lambda_min: lo.max(0.0) });
    }
    let eta = match g.w.clone().cholesky() {
        Some(ch) => ch.solve(target),
        None => {
            let qt_x = eig.eigenvectors.transpose() * target;
            &eig.eigenvectors * qt_x.component_div(&eig.eigenvalues)
        }
    };
    let at = sys.a.as_matrix().transpose();
    let mut inputs = vec![DVector::zeros(sys.m()); horizon];
    let mut z = eta.clone();
    for tau in (0..horizon).rev() {
        inputs[tau] = DVector::from_iterator(sys.m(), sys.controls.iter().map(|&k| z[k]));
        if tau > 0 {
            z = &at * z;
        }
    }
    Ok(MinEnergyInput { inputs, energy: target.dot(&eta) })
}

/// Ingredients and value of `het · σ₂^{n/m} / (σ₂² (1 - σ₂))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBound {
    pub heterogeneity: f64,
    pub sigma2: f64,
    /// `n / m`.
    pub exponent: f64,
    pub value: f64,
}

impl EnergyBound {
    pub fn ln_value(&self) -> f64 {
        self.heterogeneity.ln() + (self.exponent - 2.0) * self.sigma2.ln() - (1.0 - self.sigma2).ln()
    }
}

/// Upper bound on `λ_min(W_K(T))`, valid for every `T` and every `K` with
/// `|K| = m`, when `A` is irreducible and marginally stable with `A Aᵀ`
/// primitive, or irreducible and strictly stable.
pub fn energy_bound(s: &SpectralData, n: usize, m: usize) -> Result<EnergyBound> {
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let sigma2 = s.sigma2();
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateSpectrum(sigma2));
    }
    if sigma2 >= 1.0 - 1e-12 {
        return Err(Error::GapCollapse(sigma2));
    }
    let exponent = n as f64 / m as f64;
    let value = s.heterogeneity * sigma2.powf(exponent) / (sigma2 * sigma2 * (1.0 - sigma2));
    Ok(EnergyBound { heterogeneity: s.heterogeneity, sigma2, exponent, value })
}

/// Exhaustive enumeration is refused above this many control sets.
const LAMBDA_TIE_TOL: f64 = 1e-9;
pub const EXHAUSTIVE_CAP: u128 = 100_000;
const PLATEAU_TOL: f64 = 1e-10;
const PLATEAU_RUN: usize = 5;
const HORIZON_FACTOR: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchMode {
    /// Every `m`-subset; fails if there are more than `budget` of them.
    Exhaustive { budget: u128 },
    /// `samples` distinct uniformly drawn `m`-subsets.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaMetric {
    /// Lower estimate of `Λ(A, m)`.
    pub value: f64,
    pub controls: Vec<usize>,
    /// Horizon at which the winning set stopped.
    pub horizon: usize,
    /// The winning set plateaued before the horizon cap.
    pub converged: bool,
    pub evaluated: usize,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..m).rev().find(|&i| idx[i] < n - m + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `λ_min` at the plateau horizon: stops once the increment stays below
/// `1e-10` for 5 consecutive horizons (counted from `⌈n/m⌉`), or at `50 n`.
fn plateau_lambda(a: &DMatrix<f64>, controls: &[usize]) -> (f64, usize, bool) {
    let n = a.nrows();
    let start = n.div_ceil(controls.len());
    let mut rec = GramianRecursion::new(a, controls);
    let (mut prev, mut run) = (0.0, 0);
    while rec.horizon < HORIZON_FACTOR * n {
        rec.step();
        let lam = min_eigenvalue(&rec.w);
        if rec.horizon > start {
            run = if lam - prev < PLATEAU_TOL { run + 1 } else { 0 };
            if run >= PLATEAU_RUN {
                return (lam, rec.horizon, true);
            }
        }
        prev = lam;
    }
    (prev, rec.horizon, false)
}

/// Lower estimate of `Λ(A, m)` over enumerated or sampled control sets.
/// Ties go to the lexicographically smallest set.
pub fn lambda_metric(a: &WeightMatrix, m: usize, mode: SearchMode) -> Result<LambdaMetric> {
    let n = a.n();
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need 1 <= m <= {n}, got {m}")));
    }
    let total = binomial(n, m);
    let candidates = match mode {
        SearchMode::Exhaustive { budget } => {
            if total > budget.min(EXHAUSTIVE_CAP) {
                return Err(Error::BudgetExceeded { required: total, budget });
            }
            combinations(n, m)
        }
        SearchMode::Sampled { samples, seed } => {
            if samples as u128 >= total && total <= EXHAUSTIVE_CAP {
                combinations(n, m)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut drawn = BTreeSet::new();
                while drawn.len() < samples.min(total.min(usize::MAX as u128) as usize) {
                    let mut k = sample(&mut rng, n, m).into_vec();
                    k.sort_unstable();
                    drawn.insert(k);
                }
                drawn.into_iter().collect()
            }
        }
    };
    let mat = a.as_matrix();
    let scored: Vec<(f64, usize, bool)> =
        candidates.par_iter().map(|k| plateau_lambda(mat, k)).collect();
    let mut best = 0;
    for (i, s) in scored.iter().enumerate() {
        // candidates are in lexicographic order; near-equal values tie
        if s.0 > scored[best].0 + LAMBDA_TIE_TOL * scored[best].0.abs().max(f64::MIN_POSITIVE) {
            best = i;
        }
    }
    let (value, horizon, converged) = scored[best];
    Ok(LambdaMetric {
        value,
        controls: candidates[best].clone(),
        horizon,
        converged,
        evaluated: candidates.len(),
    })
}
