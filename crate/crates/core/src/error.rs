use thiserror::Error;

/// Errors raised by the field, ensemble and correspondence layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcsftError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operator is not Hermitian: deviation {deviation:e} exceeds {tolerance:e}")]
    NonHermitian { deviation: f64, tolerance: f64 },

    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:e} below -{tolerance:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("density operator trace {trace} is not 1 (tolerance {tolerance:e})")]
    TraceNotUnit { trace: f64, tolerance: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty sample batch")]
    EmptyBatch,

    #[error("degenerate ensemble: average field energy is zero")]
    DegenerateEnsemble,

    #[error("evaluation is not a quadratic form: consistency residual {residual:e}")]
    NotAQuadraticForm { residual: f64 },

    #[error("scale must be finite and positive, got {0}")]
    InvalidScale(f64),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("grids differ")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decode error: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, PcsftError>;
