use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tensor dimension {dimension} exceeds the budget of {budget}")]
    DimensionBudget { dimension: usize, budget: usize },

    #[error("shape mismatch: expected length {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("vector annihilated by symmetrizer (norm {norm:e})")]
    Annihilated { norm: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("need at least {needed} converged eigenpairs, have {have}")]
    TooFewEigenpairs { needed: usize, have: usize },

    #[error("family degenerate at this separation (smallest Gram eigenvalue {min_eigenvalue:e}); increase R or deduplicate")]
    SingularGram { min_eigenvalue: f64 },

    #[error("FS map not defined at lambda = {lambda}: complement gap {gap:e} is not positive")]
    ComplementGapClosed { lambda: f64, gap: f64 },

    #[error("no sign change of nu_{index}(lambda) - lambda on [{lo}, {hi}]")]
    NoSignChange { index: usize, lo: f64, hi: f64 },

    #[error("IMS scale condition violated: 2R(C_i + C_j) = {required} exceeds r_ij/2 = {available}")]
    ScaleCondition { required: f64, available: f64 },

    #[error("decay fit needs {needed} shells inside the box, found {have}")]
    TooFewShells { needed: usize, have: usize },

    #[error("missing threshold entry: {0}")]
    MissingEntry(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;
