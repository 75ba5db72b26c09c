use thiserror::Error;

/// Errors raised by the fitting, transport and experiment routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point clouds have different sizes: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degree {degree:?} does not sum to order {order}")]
    DegreeSum { degree: Vec<u32>, order: u32 },

    #[error("covariance is not positive semidefinite (pivot {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("point cloud contains duplicate points")]
    DuplicatePoints,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("proposal budget exhausted: {accepted} accepted after {attempts} proposals")]
    BudgetExhausted { attempts: u64, accepted: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
