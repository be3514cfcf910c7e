//! Random and structured graph generators and the pipeline that turns an
//! undirected topology into a lazy weighted random walk:
//! adjacency -> weights `C` -> `A = C diag(1ᵀC)⁻¹` -> `A_α = (1-α)A + αI`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{is_irreducible, WeightMatrix};
use crate::rng::stream;
use crate::spectral::SpectralData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphModel {
    /// Preferential attachment: each new node makes `d` edges.
    BarabasiAlbert { n: usize, d: usize },
    /// `G(n, p)` with `p = c ln n / n`, conditioned on being connected.
    ErdosRenyi { n: usize, c: f64 },
    /// Cartesian product of `dim` paths with `k` nodes each.
    KAry { k: usize, dim: u32 },
}

impl GraphModel {
    pub fn n(&self) -> usize {
        match *self {
            GraphModel::BarabasiAlbert { n, .. } | GraphModel::ErdosRenyi { n, .. } => n,
            GraphModel::KAry { k, dim } => k.pow(dim),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GraphModel::BarabasiAlbert { .. } => "ba",
            GraphModel::ErdosRenyi { .. } => "er",
            GraphModel::KAry { .. } => "kary",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        match *self {
            GraphModel::BarabasiAlbert { n, d } if d < 2 || n <= d => {
                bad(format!("BA needs d >= 2 and n > d, got n = {n}, d = {d}"))
            }
            GraphModel::ErdosRenyi { n, c } if !(c > 1.0) || n < 2 => {
                bad(format!("ER needs c > 1 and n >= 2, got n = {n}, c = {c}"))
            }
            GraphModel::KAry { k, dim } if k < 2 || dim < 1 => {
                bad(format!("k-ary array needs k >= 2 and dim >= 1, got k = {k}, dim = {dim}"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphModel::BarabasiAlbert { n, d } => write!(f, "BA({n},{d})"),
            GraphModel::ErdosRenyi { n, c } => write!(f, "ER({n},{c}log n/n)"),
            GraphModel::KAry { k, dim } => write!(f, "KARY({k},{dim})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// One draw per undirected edge, `C_ij = C_ji`.
    Symmetric,
    /// Independent draws for `C_ij` and `C_ji`.
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphModelConfig {
    pub model: GraphModel,
    pub weight_range: (f64, f64),
    pub weight_mode: WeightMode,
    pub alpha: f64,
    pub seed: u64,
}

/// Every matrix produced by one run of the pipeline.
#[derive(Debug, Clone)]
pub struct Realization {
    pub adjacency: WeightMatrix,
    pub weights: WeightMatrix,
    pub stochastic: WeightMatrix,
    pub lazy: WeightMatrix,
}

impl GraphModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let (a, b) = self.weight_range;
        if !(a > 0.0 && a < b && b.is_finite()) {
            return Err(Error::Precondition(format!("weight range needs 0 < a < b, got [{a}, {b}]")));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Precondition(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// Runs topology, weights, stochasticization and the lazy transform on
    /// one stream seeded with `self.seed`.
    pub fn realize(&self) -> Result<Realization> {
        self.validate()?;
        let mut rng = stream(self.seed);
        let adjacency = generate_topology(&self.model, &mut rng)?;
        let (a, b) = self.weight_range;
        let weights = assign_weights(&adjacency, a, b, self.weight_mode, &mut rng)?;
        let stochastic = to_column_stochastic(&weights)?;
        let lazy = lazy(&stochastic, self.alpha)?;
        Ok(Realization { adjacency, weights, stochastic, lazy })
    }
}

const ER_ATTEMPTS: usize = 1000;

/// Symmetric 0/1 adjacency matrix of a connected graph drawn from `model`.
pub fn generate_topology<R: Rng + ?Sized>(model: &GraphModel, rng: &mut R) -> Result<WeightMatrix> {
    model.validate()?;
    let m = match *model {
        GraphModel::BarabasiAlbert { n, d } => barabasi_albert(n, d, rng),
        GraphModel::ErdosRenyi { n, c } => erdos_renyi(n, c, rng)?,
        GraphModel::KAry { k, dim } => kary_array(k, dim),
    };
    WeightMatrix::new(m)
}

fn link(m: &mut DMatrix<f64>, i: usize, j: usize) {
    m[(i, j)] = 1.0;
    m[(j, i)] = 1.0;
}

// Seed clique on d + 1 nodes; each later node picks d distinct earlier nodes
// with probability proportional to their current degree, redrawing repeats.
fn barabasi_albert<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut degree = vec![0u64; n];
    for i in 0..=d {
        for j in 0..i {
            link(&mut m, i, j);
        }
        degree[i] = d as u64;
    }
    let mut total: u64 = degree.iter().sum();
    let mut targets = Vec::with_capacity(d);
    for new in d + 1..n {
        targets.clear();
        while targets.len() < d {
            let mut r = rng.random_range(0..total);
            let pick = degree[..new]
                .iter()
                .position(|&deg| {
                    if r < deg {
                        true
                    } else {
                        r -= deg;
                        false
                    }
                })
                .expect("draw lies below the total degree");
            if !targets.contains(&pick) {
                targets.push(pick);
            }
        }
        for &t in &targets {
            link(&mut m, new, t);
            degree[t] += 1;
        }
        degree[new] = d as u64;
        total += 2 * d as u64;
    }
    m
}

fn erdos_renyi<R: Rng + ?Sized>(n: usize, c: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let p = (c * (n as f64).ln() / n as f64).min(1.0);
    for _ in 0..ER_ATTEMPTS {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    link(&mut m, i, j);
                }
            }
        }
        if is_irreducible(&WeightMatrix::new(m.clone())?) {
            return Ok(m);
        }
    }
    Err(Error::RejectionCap(ER_ATTEMPTS))
}

fn kary_array(k: usize, dim: u32) -> DMatrix<f64> {
    let n = k.pow(dim);
    let mut m = DMatrix::zeros(n, n);
    for node in 0..n {
        let mut stride = 1;
        for _ in 0..dim {
            // coordinate along this axis is (node / stride) % k
            if (node / stride) % k + 1 < k {
                link(&mut m, node, node + stride);
            }
            stride *= k;
        }
    }
    m
}

/// Replaces every edge of the symmetric 0/1 `adj` by a weight drawn
/// uniformly from `[a, b]`, visiting edges in `(i, j)`, `i < j` order.
pub fn assign_weights<R: Rng + ?Sized>(
    adj: &WeightMatrix,
    a: f64,
    b: f64,
    mode: WeightMode,
    rng: &mut R,
) -> Result<WeightMatrix> {
    if !(a > 0.0 && a < b && b.is_finite()) {
        return Err(Error::Precondition(format!("weight range needs 0 < a < b, got [{a}, {b}]")));
    }
    if !adj.is_symmetric(0.0) {
        return Err(Error::Precondition("adjacency must be symmetric".into()));
    }
    let n = adj.n();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if adj.get(i, j) > 0.0 {
                let w = rng.random_range(a..=b);
                c[(i, j)] = w;
                c[(j, i)] = match mode {
                    WeightMode::Symmetric => w,
                    WeightMode::Asymmetric => rng.random_range(a..=b),
                };
            }
        }
    }
    WeightMatrix::new(c)
}

/// `A = C diag(1ᵀ C)⁻¹`.
pub fn to_column_stochastic(c: &WeightMatrix) -> Result<WeightMatrix> {
    let sums = c.column_sums();
    if let Some(j) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let m = c.as_matrix();
    WeightMatrix::new(DMatrix::from_fn(c.n(), c.n(), |i, j| m[(i, j)] / sums[j]))
}

/// `A_α = (1 - α) A + α I` for column-stochastic `A`.
pub fn lazy(a: &WeightMatrix, alpha: f64) -> Result<WeightMatrix> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !a.is_column_stochastic(1e-12) {
        return Err(Error::Precondition("lazy transform needs a column-stochastic matrix".into()));
    }
    let n = a.n();
    WeightMatrix::new(a.as_matrix() * (1.0 - alpha) + DMatrix::identity(n, n) * alpha)
}

/// Node order by descending centrality, ties by ascending index. Values are
/// compared after rounding to ten digits relative to the largest, so that
/// entries equal up to rounding noise count as ties.
pub fn centrality_order(v: &DVector<f64>) -> Vec<usize> {
    let top = v.amax().max(f64::MIN_POSITIVE);
    let key = |i: usize| (v[i] / top * 1e10).round() as i64;
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(key(i)), i));
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centralities {
    /// In-weight of each node, `Σ_j C_ji` (the weighted degree for symmetric `C`).
    pub degree: DVector<f64>,
    /// Right leading eigenvector of `A`.
    pub eigen: DVector<f64>,
    /// Nodes by descending eigenvector centrality (PageRank with no damping).
    pub order: Vec<usize>,
}

impl Centralities {
    /// `max_i degree_i / min_i degree_i`.
    pub fn degree_ratio(&self) -> f64 {
        self.degree.max() / self.degree.min()
    }
}

pub fn centralities(c: &WeightMatrix, s: &SpectralData) -> Centralities {
    Centralities { degree: c.column_sums(), eigen: s.v.clone(), order: centrality_order(&s.v) }
}

/// `(c_min, c_max)` over the nonzero entries.
pub fn weight_extremes(c: &WeightMatrix) -> (f64, f64) {
    c.as_matrix()
        .iter()
        .filter(|&&x| x > 0.0)
        .fold((f64::INFINITY, 0.0), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}
