//! Energy-based controllability analysis for linear network systems
//! `x(t+1) = A x(t) + B u(t)` with a nonnegative, irreducible, marginally
//! stable network matrix `A`.
//!
//! The crate computes controllability Gramians and their minimum
//! eigenvalues, the Perron eigenvectors and the symmetrized product whose
//! second eigenvalue drives an upper bound on `lambda_min`, the bottleneck
//! ratio of a random walk, and runs seeded random-graph ensembles that emit
//! CSV for plotting.

pub mod cheeger;
pub mod error;
pub mod experiments;
pub mod gramian;
pub mod graph;
pub mod matrix;
pub mod rng;
pub mod spectral;
#[cfg(test)]
mod testutil;

pub use cheeger::{
    array_gap_bound, asymptotic_log_bound, bottleneck_ratio, cheeger_gap_check,
    weighted_cut_bounds, ArrayGapBound, CheegerCheck, CutMethod, CutReport,
};
pub use error::{Error, Result};
pub use experiments::{
    place_controls, run_ensemble, scaling_study, EnsembleOutput, EnsembleRecord, Family,
    ExperimentConfig, HorizonRule, Placement, Preset, Schedule, ScalingRow,
};
pub use gramian::{
    energy_bound, gramian, gramian_until_converged, gramian_with_direction, lambda_metric,
    min_energy_input,
    ControlSystem, EnergyBound, GramianResult, LambdaMetric, MinEnergyInput, SearchMode,
};
pub use graph::{
    assign_weights, centralities, generate_topology, lazy, to_column_stochastic, Centralities,
    GraphModel, GraphModelConfig, WeightMode,
};
pub use matrix::{
    is_irreducible, is_pattern_primitive, spectral_norm, stability_report, StructuralReport,
    WeightMatrix,
};
pub use spectral::{
    check_contraction, is_reversible, kernel_condition, leading_eigenpair, reversal, symmetrize,
    symmetrized_product, SpectralData,
};
