//! Bottleneck ratio (Cheeger constant) of a column-stochastic walk,
//!
//! ```text
//! h = min_{S : v(S) <= 1/2} Q(S, S̄) / v(S),   Q(S, S̄) = Σ_{i∈S, j∉S} A_ji v_i,
//! ```
//!
//! found by exhaustive enumeration for small `n`, together with the analytic
//! lower bounds on `h` and upper bounds on `λ₂` used for weighted random
//! walks on random graphs and k-ary arrays.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;
use crate::spectral::{symmetrize, SpectralData};

/// Largest `n` accepted by the exhaustive enumeration (`2^22` subsets).
pub const MAX_EXHAUSTIVE_N: usize = 22;
/// Subsets whose measure exceeds 1/2 by at most this are kept, so exact
/// half-measure cuts survive rounding.
const HALF_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;
/// Gray-code run length between exact recomputations of the running sums.
const CHUNK_BITS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutMethod {
    BruteForce,
    AnalyticArray,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutReport {
    pub h: f64,
    /// Minimizing subset, ascending node indices.
    pub argmin: Vec<usize>,
    /// `1 - h² / 2`.
    pub lambda2_bound: f64,
    pub method: CutMethod,
}

/// Minimizes `flow(S) / measure(S)` over nonempty `S` with `feas(S) <= 1/2`,
/// where `flow(S) = Σ_{i∈S, j∉S} F_ij`.
struct CutProblem<'a> {
    flow: &'a DMatrix<f64>,
    measure: &'a [f64],
    feas: &'a [f64],
}

#[derive(Clone, Copy)]
struct Candidate {
    value: f64,
    mask: u32,
}

/// Lexicographic order of the ascending index lists encoded by two masks.
fn lex_less(a: u32, b: u32) -> bool {
    if a == b {
        return false;
    }
    // the lowest differing index is in exactly one of the two sets
    let low = (a ^ b).trailing_zeros();
    let above = |m: u32| (m as u64) >> (low + 1) != 0;
    if a >> low & 1 == 1 {
        // a has the smaller element here unless b stops first
        above(b)
    } else {
        !above(a)
    }
}

fn better(a: Candidate, b: Candidate) -> bool {
    let scale = a.value.abs().max(b.value.abs()).max(f64::MIN_POSITIVE);
    if (a.value - b.value).abs() > TIE_TOL * scale {
        return a.value < b.value;
    }
    let (ca, cb) = (a.mask.count_ones(), b.mask.count_ones());
    if ca != cb {
        return ca < cb;
    }
    lex_less(a.mask, b.mask)
}

impl CutProblem<'_> {
    fn n(&self) -> usize {
        self.measure.len()
    }

    fn sums(&self, mask: u32) -> (f64, f64, f64) {
        let n = self.n();
        let mut flow = 0.0;
        let (mut mu, mut fe) = (0.0, 0.0);
        for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
            mu += self.measure[i];
            fe += self.feas[i];
            for j in (0..n).filter(|&j| mask >> j & 1 == 0) {
                flow += self.flow[(i, j)];
            }
        }
        (flow, mu, fe)
    }

    fn ratio(&self, mask: u32) -> f64 {
        let (flow, mu, _) = self.sums(mask);
        flow / mu
    }

    fn scan_chunk(&self, chunk: u64) -> Option<Candidate> {
        let n = self.n();
        let start = chunk << CHUNK_BITS;
        let end = (start + (1 << CHUNK_BITS)).min(1u64 << n);
        let gray = |i: u64| (i ^ (i >> 1)) as u32;
        let mut mask = gray(start);
        let (mut flow, mut mu, mut fe) = self.sums(mask);
        let mut best: Option<Candidate> = None;
        let mut consider = |mask: u32, flow: f64, mu: f64, fe: f64| {
            if mask != 0 && fe <= 0.5 + HALF_TOL {
                let c = Candidate { value: flow / mu, mask };
                if best.is_none_or(|b| better(c, b)) {
                    best = Some(c);
                }
            }
        };
        consider(mask, flow, mu, fe);
        for i in start + 1..end {
            let k = i.trailing_zeros() as usize;
            let inside = mask >> k & 1 == 1;
            // flow from k to the outside and from the rest of S into k
            let mut out_k = 0.0;
            let mut in_k = 0.0;
            for j in (0..n).filter(|&j| j != k) {
                if mask >> j & 1 == 1 {
                    in_k += self.flow[(j, k)];
                } else {
                    out_k += self.flow[(k, j)];
                }
            }
            if inside {
                flow += in_k - out_k;
                mu -= self.measure[k];
                fe -= self.feas[k];
            } else {
                flow += out_k - in_k;
                mu += self.measure[k];
                fe += self.feas[k];
            }
            mask ^= 1 << k;
            consider(mask, flow, mu, fe);
        }
        best
    }

    fn solve(&self) -> Result<(f64, u32)> {
        let n = self.n();
        if n > MAX_EXHAUSTIVE_N {
            return Err(Error::TooLarge { n, max: MAX_EXHAUSTIVE_N });
        }
        if n < 2 {
            return Err(Error::Precondition("cuts need at least two nodes".into()));
        }
        let chunks = ((1u64 << n) >> CHUNK_BITS).max(1);
        let per_chunk: Vec<Option<Candidate>> =
            (0..chunks).into_par_iter().map(|c| self.scan_chunk(c)).collect();
        let best = per_chunk
            .into_iter()
            .flatten()
            .reduce(|acc, c| if better(c, acc) { c } else { acc })
            .ok_or_else(|| Error::Precondition("no subset has measure at most 1/2".into()))?;
        Ok((self.ratio(best.mask), best.mask))
    }
}

fn mask_nodes(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Exact bottleneck ratio of a column-stochastic walk with stationary
/// vector `s.v`. Ties go to the smallest subset, then lexicographically.
pub fn bottleneck_ratio(a: &WeightMatrix, s: &SpectralData) -> Result<CutReport> {
    if !a.is_column_stochastic(1e-9) {
        return Err(Error::Precondition("bottleneck ratio needs a column-stochastic matrix".into()));
    }
    let n = a.n();
    let m = a.as_matrix();
    let v = &s.v;
    let flow = DMatrix::from_fn(n, n, |i, j| m[(j, i)] * v[i]);
    let v = v.as_slice();
    let (h, mask) = CutProblem { flow: &flow, measure: v, feas: v }.solve()?;
    Ok(CutReport { h, argmin: mask_nodes(mask), lambda2_bound: 1.0 - h * h / 2.0, method: CutMethod::BruteForce })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheegerCheck {
    pub lambda2: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub cut: CutReport,
}

/// Compares `λ₂` of a reversible walk with `1 - h² / 2`.
pub fn cheeger_gap_check(a: &WeightMatrix, s: &SpectralData) -> Result<CheegerCheck> {
    let sym = symmetrize(a, s, 1e-9)?;
    let cut = bottleneck_ratio(a, s)?;
    let lambda2 = sym.lambda2();
    let bound = cut.lambda2_bound;
    Ok(CheegerCheck { lambda2, bound, satisfied: lambda2 <= bound + 1e-9, cut })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCutBound {
    /// `(a / b) · min e(S, S̄) / vol(S)`.
    pub h_lower: f64,
    /// The unweighted minimum `min e(S, S̄) / vol(S)`.
    pub conductance: f64,
    pub argmin: Vec<usize>,
}

/// Lower bound on the bottleneck ratio of the walk built from `C` through
/// the unweighted edge boundary and volume of `adj`, over the same family
/// `v(S) <= 1/2` with `v = C^col / C_tot`.
pub fn weighted_cut_bounds(c: &WeightMatrix, adj: &WeightMatrix, a: f64, b: f64) -> Result<WeightedCutBound> {
    if !(a > 0.0 && a <= b) {
        return Err(Error::Precondition(format!("need 0 < a <= b, got a = {a}, b = {b}")));
    }
    if !adj.is_symmetric(0.0) || !c.is_symmetric(1e-12) {
        return Err(Error::Precondition("weighted cut bound needs symmetric C and adjacency".into()));
    }
    let col = c.column_sums();
    let v: Vec<f64> = (&col / col.sum()).iter().copied().collect();
    let pattern = adj.as_matrix().map(|x| (x > 0.0) as u8 as f64);
    let degree: Vec<f64> = pattern.column_iter().map(|c| c.sum()).collect();
    let (conductance, mask) = CutProblem { flow: &pattern, measure: &degree, feas: &v }.solve()?;
    Ok(WeightedCutBound { h_lower: a / b * conductance, conductance, argmin: mask_nodes(mask) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGapBound {
    pub n: usize,
    pub dim: u32,
    /// `λ₂ ≤ 1 - K n^{-gap_exponent}`.
    pub gap_exponent: f64,
    /// Actuation below `o(n^{control_exponent} / log n)` is insufficient.
    pub control_exponent: f64,
    /// `2 / n^{1/3}` (three dimensions only).
    pub isoperimetric_lower: Option<f64>,
    /// `(a / 3b) n^{-1/3}`.
    pub h_lower: Option<f64>,
    /// `B(n) = 1 - K n^{-2/3}`.
    pub lambda2_upper: Option<f64>,
    /// `K = a² / (18 b²)`.
    pub k_const: Option<f64>,
}

/// Analytic spectral-gap bounds for the weighted walk on a `dim`-dimensional
/// k-ary array. Explicit constants exist for `dim = 3` only; other
/// dimensions carry the exponents alone.
pub fn array_gap_bound(k: usize, dim: u32, a: f64, b: f64) -> Result<ArrayGapBound> {
    if k < 2 || dim < 1 || !(a > 0.0 && a <= b) {
        return Err(Error::Precondition(format!("invalid array bound input k={k} dim={dim} a={a} b={b}")));
    }
    let n = k.pow(dim);
    let d = dim as f64;
    let mut out = ArrayGapBound {
        n,
        dim,
        gap_exponent: 2.0 / d,
        control_exponent: 1.0 - 2.0 / d,
        isoperimetric_lower: None,
        h_lower: None,
        lambda2_upper: None,
        k_const: None,
    };
    if dim == 3 {
        let cbrt = (n as f64).cbrt();
        let kc = a * a / (18.0 * b * b);
        out.isoperimetric_lower = Some(2.0 / cbrt);
        out.h_lower = Some(a / (3.0 * b) / cbrt);
        out.lambda2_upper = Some(1.0 - kc / (cbrt * cbrt));
        out.k_const = Some(kc);
    }
    Ok(out)
}

/// `ln` of the explicit upper bound on `Λ(A_α, m)` for the lazy weighted walk
/// on a three-dimensional array with `n` nodes:
/// `ln(2b/a) + (n/m - 2) ln σ̄ - ln(1 - σ̄)`, `σ̄ = ((1-α) B(n) + α)²`.
pub fn asymptotic_log_bound(n: usize, m: usize, a: f64, b: f64, alpha: f64) -> Result<f64> {
    if m == 0 || m > n || !(a > 0.0 && a <= b) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!(
            "invalid input n={n} m={m} a={a} b={b} alpha={alpha}"
        )));
    }
    let kc = a * a / (18.0 * b * b);
    // σ̄ = (1 - x)² with x = (1 - α) K n^{-2/3}
    let x = (1.0 - alpha) * kc * (n as f64).powf(-2.0 / 3.0);
    let sigma_bar = (1.0 - x) * (1.0 - x);
    let other = (2.0 * alpha - 1.0).powi(2);
    if sigma_bar < other {
        return Err(Error::BoundBranch(format!(
            "(2α - 1)² = {other} exceeds ((1-α)B(n)+α)² = {sigma_bar}; n is too small"
        )));
    }
    let ln_sigma = 2.0 * (-x).ln_1p();
    let one_minus = x * (2.0 - x);
    Ok((2.0 * b / a).ln() + (n as f64 / m as f64 - 2.0) * ln_sigma - one_minus.ln())
}

/// Unweighted `e(S, S̄) / |S|` for a node subset of a symmetric pattern.
pub fn edge_expansion(adj: &WeightMatrix, set: &[usize]) -> f64 {
    let n = adj.n();
    let mut inside = vec![false; n];
    for &i in set {
        inside[i] = true;
    }
    let boundary = set
        .iter()
        .flat_map(|&i| (0..n).filter(move |&j| adj.get(i, j) > 0.0).map(move |j| (i, j)))
        .filter(|&(_, j)| !inside[j])
        .count();
    boundary as f64 / set.len() as f64
}

/// `Σ_{i∈S} v_i` for a vector and node subset.
pub fn measure(v: &DVector<f64>, set: &[usize]) -> f64 {
    set.iter().map(|&i| v[i]).sum()
}
