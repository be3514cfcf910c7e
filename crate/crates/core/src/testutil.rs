//! Random generators shared by the unit and property tests.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{assign_weights, generate_topology, lazy, to_column_stochastic, GraphModel, WeightMode};
use crate::matrix::WeightMatrix;
use crate::spectral::leading_eigenpair;

/// Random Hamiltonian cycle plus extra edges with probability `p`; weights in `[0.1, 1]`.
pub fn irreducible(rng: &mut ChaCha8Rng, n: usize, p: f64, positive_diagonal: bool) -> DMatrix<f64> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        a[(order[(k + 1) % n], order[k])] = rng.random_range(0.1..1.0);
    }
    for i in 0..n {
        for j in 0..n {
            if (i == j && positive_diagonal) || (a[(i, j)] == 0.0 && rng.random::<f64>() < p) {
                a[(i, j)] = rng.random_range(0.1..1.0);
            }
        }
    }
    a
}

/// Irreducible and marginally stable: column-stochastic, or scaled to a
/// spectral radius in `[0.4, 1]`.
pub fn marginally_stable(rng: &mut ChaCha8Rng, n: usize, positive_diagonal: bool) -> WeightMatrix {
    let p = rng.random_range(0.0..0.4);
    let raw = WeightMatrix::new(irreducible(rng, n, p, positive_diagonal)).unwrap();
    if rng.random::<bool>() {
        return to_column_stochastic(&raw).unwrap();
    }
    let radius = if rng.random::<bool>() { 1.0 } else { rng.random_range(0.4..1.0) };
    let rho = leading_eigenpair(&raw, 1e-13).unwrap().lambda1;
    WeightMatrix::new(raw.into_inner() * (radius / rho)).unwrap()
}

/// Walk on symmetric `[0.5, 2]` weights over a small connected graph, lazy
/// half of the time.
pub fn reversible_walk(rng: &mut ChaCha8Rng, n: usize) -> WeightMatrix {
    let model = if rng.random::<bool>() {
        GraphModel::BarabasiAlbert { n, d: 2 }
    } else {
        GraphModel::ErdosRenyi { n, c: 2.5 }
    };
    let adj = generate_topology(&model, rng).unwrap();
    let c = assign_weights(&adj, 0.5, 2.0, WeightMode::Symmetric, rng).unwrap();
    let walk = to_column_stochastic(&c).unwrap();
    if rng.random::<bool>() {
        lazy(&walk, rng.random_range(0.1..0.9)).unwrap()
    } else {
        walk
    }
}
