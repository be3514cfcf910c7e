#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use netgram_core::graph::{assign_weights, generate_topology, lazy, to_column_stochastic};
use netgram_core::{leading_eigenpair, GraphModel, WeightMatrix, WeightMode};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Nonnegative irreducible matrix: a random Hamiltonian cycle plus extra
/// edges with probability `p`, weights in `[0.1, 1]`.
pub fn irreducible(rng: &mut ChaCha8Rng, n: usize, p: f64, positive_diagonal: bool) -> DMatrix<f64> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        a[(order[(k + 1) % n], order[k])] = rng.random_range(0.1..1.0);
    }
    for i in 0..n {
        for j in 0..n {
            let diag = i == j && positive_diagonal;
            if diag || (a[(i, j)] == 0.0 && rng.random::<f64>() < p) {
                a[(i, j)] = rng.random_range(0.1..1.0);
            }
        }
    }
    a
}

pub fn column_stochastic(a: DMatrix<f64>) -> WeightMatrix {
    let sums = a.row_sum();
    let n = a.nrows();
    WeightMatrix::new(DMatrix::from_fn(n, n, |i, j| a[(i, j)] / sums[j])).unwrap()
}

/// `a` scaled so that its spectral radius equals `radius`.
pub fn with_radius(a: DMatrix<f64>, radius: f64) -> WeightMatrix {
    let w = WeightMatrix::new(a).unwrap();
    let rho = leading_eigenpair(&w, 1e-13).unwrap().lambda1;
    WeightMatrix::new(w.into_inner() * (radius / rho)).unwrap()
}

/// Irreducible, marginally stable matrix: column-stochastic, or scaled to a
/// spectral radius in `[0.4, 1]`.
pub fn marginally_stable(rng: &mut ChaCha8Rng, n: usize, positive_diagonal: bool) -> WeightMatrix {
    let p = rng.random_range(0.0..0.4);
    let raw = irreducible(rng, n, p, positive_diagonal);
    match rng.random_range(0..3) {
        0 => column_stochastic(raw),
        1 => with_radius(raw, 1.0),
        _ => {
            let r = rng.random_range(0.4..1.0);
            with_radius(raw, r)
        }
    }
}

/// Symmetric weights on a small random connected graph, with its pattern.
pub fn symmetric_weights(rng: &mut ChaCha8Rng, n: usize, a: f64, b: f64) -> (WeightMatrix, WeightMatrix) {
    let model = if rng.random::<bool>() {
        GraphModel::BarabasiAlbert { n, d: 2 }
    } else {
        GraphModel::ErdosRenyi { n, c: 2.5 }
    };
    let adj = generate_topology(&model, rng).unwrap();
    let c = assign_weights(&adj, a, b, WeightMode::Symmetric, rng).unwrap();
    (adj, c)
}

/// Random walk on symmetric weights, made lazy with probability 1/2.
pub fn reversible_walk(rng: &mut ChaCha8Rng, n: usize) -> (WeightMatrix, WeightMatrix, WeightMatrix) {
    let (adj, c) = symmetric_weights(rng, n, 0.5, 2.0);
    let mut walk = to_column_stochastic(&c).unwrap();
    if rng.random::<bool>() {
        walk = lazy(&walk, rng.random_range(0.1..0.9)).unwrap();
    }
    (adj, c, walk)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// `Σ_{τ<T} A^τ B Bᵀ (Aᵀ)^τ` by explicit powers.
pub fn gramian_by_definition(a: &DMatrix<f64>, controls: &[usize], horizon: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut b = DMatrix::zeros(n, controls.len());
    for (col, &k) in controls.iter().enumerate() {
        b[(k, col)] = 1.0;
    }
    let bbt = &b * b.transpose();
    let mut power = DMatrix::identity(n, n);
    let mut w = DMatrix::zeros(n, n);
    for _ in 0..horizon {
        w += &power * &bbt * power.transpose();
        power = a * power;
    }
    w
}
