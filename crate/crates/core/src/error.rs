use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not irreducible")]
    NotIrreducible,

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("symmetrized product has eigenvalue {value:e}, below the positive-semidefinite tolerance")]
    NotPositiveSemidefinite { value: f64 },

    #[error("degenerate spectrum: sigma2 = {0:e} leaves the bound undefined")]
    DegenerateSpectrum(f64),

    #[error("spectral gap collapsed: sigma2 = {0} is not below 1")]
    GapCollapse(f64),

    #[error("system is not controllable at horizon {horizon} (lambda_min = {lambda_min:e})")]
    Uncontrollable { horizon: usize, lambda_min: f64 },

    #[error("exhaustive search needs {required} control sets, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("n = {n} exceeds the exhaustive cut enumeration limit of {max}; use the analytic bounds")]
    TooLarge { n: usize, max: usize },

    #[error("no connected graph after {0} attempts")]
    RejectionCap(usize),

    #[error("column {0} sums to zero")]
    ZeroColumn(usize),

    #[error("bound precondition fails: {0}")]
    BoundBranch(String),

    #[error("{failed} of {total} realizations failed (limit 5%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
