//! Perron eigenpair machinery: leading eigenvectors `v`, `w`, the weight
//! vector `π = w / v`, the time reversal `A^R = Π⁻¹ Aᵀ Π`, and the
//! symmetrized product `A^S = Π^{1/2} A A^R Π^{-1/2}` whose second
//! eigenvalue `σ₂` controls how fast energy leaks out of `v⊥`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::{is_irreducible, spectral_norm, WeightMatrix};

/// Default residual tolerance for the power iteration.
pub const DEFAULT_TOL: f64 = 1e-12;
const ITERATION_CAP: usize = 1_000_000;
/// Eigenvalues of `A^S` in `[-PSD_CLAMP, 0)` are rounding noise and clamped.
const PSD_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Perron eigenvalue.
    pub lambda1: f64,
    /// Right leading eigenvector, scaled to `Σ vᵢ = 1`.
    pub v: DVector<f64>,
    /// Left leading eigenvector, scaled so that `Σ wᵢ / vᵢ = 1`.
    pub w: DVector<f64>,
    /// `πᵢ = wᵢ / vᵢ`, sums to 1.
    pub pi: DVector<f64>,
    /// Eigenvalues of `A^S`, nonincreasing and nonnegative.
    pub sigma: DVector<f64>,
    /// `max πᵢ / min πᵢ`.
    pub heterogeneity: f64,
    /// Power iterations spent on `v` and `w` together.
    pub iterations: usize,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma[0]
    }

    /// Second largest eigenvalue of `A^S`; zero when `n = 1`.
    pub fn sigma2(&self) -> f64 {
        self.sigma.get(1).copied().unwrap_or(0.0)
    }

    pub fn spectral_gap(&self) -> f64 {
        1.0 - self.sigma2()
    }

    /// `max vᵢ / min vᵢ`, the centrality spread that equals the
    /// heterogeneity index for column-stochastic matrices.
    pub fn v_ratio(&self) -> f64 {
        self.v.max() / self.v.min()
    }
}

/// Cheap lower bound on `‖A‖₂`: the largest row or column 2-norm.
fn norm_lower_bound(a: &DMatrix<f64>) -> f64 {
    let cols = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let rows = a.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    cols.max(rows)
}

/// Inverse-iteration steps at the converged shift; kept only while they
/// lower the residual and stay positive.
fn polish(m: &DMatrix<f64>, lambda: f64, mut x: DVector<f64>, mut residual: f64) -> DVector<f64> {
    let shifted = m - DMatrix::identity(m.nrows(), m.ncols()) * lambda;
    let lu = shifted.lu();
    for _ in 0..2 {
        let Some(mut z) = lu.solve(&x) else { break };
        let s = z.sum();
        if !s.is_finite() || s == 0.0 {
            break;
        }
        z /= s;
        let r = (m * &z - lambda * &z).norm();
        if z.iter().any(|&zi| zi <= 0.0) || r >= residual {
            break;
        }
        x = z;
        residual = r;
    }
    x
}

/// Power iteration on `I + M`, stopping once `‖Mx - λx‖ ≤ tol·scale·‖x‖`.
fn perron_vector(m: &DMatrix<f64>, tol: f64, scale: f64) -> Result<(f64, DVector<f64>, usize)> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut y = DVector::zeros(n);
    for it in 1..=ITERATION_CAP {
        m.mul_to(&x, &mut y);
        let lambda = x.dot(&y) / x.dot(&x);
        let residual = (&y - lambda * &x).norm();
        if residual <= tol * scale * x.norm() {
            return Ok((lambda, polish(m, lambda, x, residual), it));
        }
        x += &y;
        let s = x.sum();
        x /= s;
    }
    Err(Error::NoConvergence { what: "Perron power iteration", iterations: ITERATION_CAP })
}

/// Leading eigenpair of an irreducible nonnegative matrix together with the
/// derived `π`, heterogeneity and `σ` spectrum.
pub fn leading_eigenpair(a: &WeightMatrix, tol: f64) -> Result<SpectralData> {
    if !is_irreducible(a) {
        return Err(Error::NotIrreducible);
    }
    let m = a.as_matrix();
    let scale = norm_lower_bound(m).max(f64::MIN_POSITIVE);
    let (lambda1, mut v, it_v) = perron_vector(m, tol, scale)?;
    let (_, mut w, it_w) = perron_vector(&m.transpose(), tol, scale)?;
    v /= v.sum();
    let pi_sum: f64 = w.iter().zip(v.iter()).map(|(wi, vi)| wi / vi).sum();
    w /= pi_sum;
    let pi = w.component_div(&v);
    let heterogeneity = pi.max() / pi.min();
    let sigma = sorted_spectrum(&symmetrized_with(m, &pi))?;
    Ok(SpectralData { lambda1, v, w, pi, sigma, heterogeneity, iterations: it_v + it_w })
}

/// `A^R = Π⁻¹ Aᵀ Π`.
pub fn reversal(a: &WeightMatrix, s: &SpectralData) -> WeightMatrix {
    let m = a.as_matrix();
    let pi = &s.pi;
    let r = DMatrix::from_fn(a.n(), a.n(), |i, j| m[(j, i)] * pi[j] / pi[i]);
    WeightMatrix::new(r).expect("reversal of a nonnegative matrix is nonnegative")
}

// Π^{1/2} A A^R Π^{-1/2} = M Mᵀ with M = Π^{1/2} A Π^{-1/2}.
fn symmetrized_with(a: &DMatrix<f64>, pi: &DVector<f64>) -> DMatrix<f64> {
    let sqrt_pi = pi.map(f64::sqrt);
    let half = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * sqrt_pi[i] / sqrt_pi[j]);
    let prod = &half * half.transpose();
    (&prod + prod.transpose()) * 0.5
}

fn sorted_spectrum(sym: &DMatrix<f64>) -> Result<DVector<f64>> {
    let mut eig: Vec<f64> = SymmetricEigen::new(sym.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    let scale = eig.first().map_or(1.0, |x| x.abs().max(1.0));
    for x in &mut eig {
        if *x < 0.0 {
            if *x < -PSD_CLAMP * scale {
                return Err(Error::NotPositiveSemidefinite { value: *x });
            }
            *x = 0.0;
        }
    }
    Ok(DVector::from_vec(eig))
}

/// The symmetrized product `A^S` and its eigenvalues, nonincreasing.
pub fn symmetrized_product(
    a: &WeightMatrix,
    s: &SpectralData,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let sym = symmetrized_with(a.as_matrix(), &s.pi);
    let sigma = sorted_spectrum(&sym)?;
    Ok((sym, sigma))
}

fn require_stochastic(a: &WeightMatrix, tol: f64) -> Result<()> {
    if !a.is_column_stochastic(tol) {
        return Err(Error::Precondition(
            "reversibility is defined for column-stochastic matrices".into(),
        ));
    }
    Ok(())
}

/// True iff the column-stochastic `A` equals its time reversal within `tol`
/// (max-norm).
pub fn is_reversible(a: &WeightMatrix, s: &SpectralData, tol: f64) -> Result<bool> {
    require_stochastic(a, tol)?;
    let r = reversal(a, s);
    Ok((a.as_matrix() - r.as_matrix()).amax() <= tol)
}

/// Symmetric similarity transform of a reversible matrix.
#[derive(Debug, Clone)]
pub struct SymmetricForm {
    pub matrix: DMatrix<f64>,
    /// Real eigenvalues of `A`, nonincreasing.
    pub eigenvalues: DVector<f64>,
}

impl SymmetricForm {
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(f64::NAN)
    }

    pub fn lambda_n(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

/// `S = Π^{1/2} A Π^{-1/2}` for reversible `A`.
pub fn symmetrize(a: &WeightMatrix, s: &SpectralData, tol: f64) -> Result<SymmetricForm> {
    if !is_reversible(a, s, tol)? {
        return Err(Error::Precondition("matrix is not reversible".into()));
    }
    let m = a.as_matrix();
    let sq = s.pi.map(f64::sqrt);
    let half = DMatrix::from_fn(a.n(), a.n(), |i, j| m[(i, j)] * sq[i] / sq[j]);
    let matrix = (&half + half.transpose()) * 0.5;
    let mut eig: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(SymmetricForm { matrix, eigenvalues: DVector::from_vec(eig) })
}

/// `‖y‖²_W` for diagonal `W = diag(weights)`.
fn weighted_sq(y: &DVector<f64>, weights: impl Fn(usize) -> f64) -> f64 {
    y.iter().enumerate().map(|(i, x)| x * x * weights(i)).sum()
}

/// Removes the component of `y` along `dir`.
pub fn project_out(y: &DVector<f64>, dir: &DVector<f64>) -> DVector<f64> {
    y - dir * (y.dot(dir) / dir.dot(dir))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contraction {
    pub lhs: f64,
    pub rhs: f64,
}

impl Contraction {
    pub fn holds(&self, rel: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel)
    }
}

const ORTHO_TOL: f64 = 1e-9;

/// `‖(Aᵀ)ᵗ y‖²_{Π⁻¹}` against `σ₂ᵗ ‖y‖²_{Π⁻¹}` for `y ⊥ v`.
pub fn check_contraction(
    a: &WeightMatrix,
    s: &SpectralData,
    y: &DVector<f64>,
    t: u32,
) -> Result<Contraction> {
    if y.dot(&s.v).abs() > ORTHO_TOL * y.norm() * s.v.norm() {
        return Err(Error::Precondition("y is not orthogonal to v".into()));
    }
    let inv_pi = |i: usize| 1.0 / s.pi[i];
    let at = a.as_matrix().transpose();
    let mut z = y.clone();
    for _ in 0..t {
        // exact arithmetic keeps z ⊥ v; re-projecting stops rounding drift
        z = project_out(&(&at * &z), &s.v);
    }
    Ok(Contraction {
        lhs: weighted_sq(&z, inv_pi),
        rhs: s.sigma2().powi(t as i32) * weighted_sq(y, inv_pi),
    })
}

/// One-step contraction of the reversal, `‖A^R x‖²_Π ≤ σ₂ ‖x‖²_Π` for `x ⊥ w`.
pub fn check_reversal_contraction(
    a: &WeightMatrix,
    s: &SpectralData,
    x: &DVector<f64>,
) -> Result<Contraction> {
    if x.dot(&s.w).abs() > ORTHO_TOL * x.norm() * s.w.norm() {
        return Err(Error::Precondition("x is not orthogonal to w".into()));
    }
    let r = reversal(a, s);
    let rx = r.as_matrix() * x;
    let pi = |i: usize| s.pi[i];
    Ok(Contraction { lhs: weighted_sq(&rx, pi), rhs: s.sigma2() * weighted_sq(x, pi) })
}

/// True iff `‖(A - Aᵀ) v‖ ≤ tol ‖A‖₂ ‖v‖`, which holds exactly when the
/// heterogeneity index is 1.
pub fn kernel_condition(a: &WeightMatrix, s: &SpectralData, tol: f64) -> bool {
    let m = a.as_matrix();
    let skew = m - m.transpose();
    (skew * &s.v).norm() <= tol * spectral_norm(a) * s.v.norm()
}
