use thiserror::Error;

/// Errors raised across mesh construction, assembly and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element index {index} out of range for mesh with {len} elements")]
    ElementOutOfRange { index: usize, len: usize },

    #[error("mesh has no interior degrees of freedom")]
    EmptyInterior,

    #[error("regularization value {value} on element {element} is not positive")]
    NonPositiveRegularization { element: usize, value: f64 },

    #[error("lumped mass row {row} has nonpositive sum {value}")]
    NonPositiveRowSum { row: usize, value: f64 },

    #[error("matrix is not positive definite: pivot {pivot} failed")]
    NotPositiveDefinite { pivot: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("objects belong to different mesh revisions ({expected} vs {got})")]
    RevisionMismatch { expected: u64, got: u64 },

    #[error("solver {solver} failed: {reason}")]
    Solver { solver: String, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
