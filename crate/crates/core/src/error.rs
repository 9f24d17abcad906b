use thiserror::Error;

/// Where a non-differentiable point was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum KinkLocation {
    /// A scalar argument passed directly to a loss or penalty.
    Scalar,
    /// Observation `i` sits at a kink of the loss.
    Observation(usize),
    /// Coefficient `j` sits at a kink of the penalty.
    Coefficient(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument {value} outside the domain: {reason}")]
    Domain { value: f64, reason: String },

    #[error("function is not differentiable at {location:?} (argument {value})")]
    Kink { location: KinkLocation, value: f64 },

    #[error("linear system is numerically singular (jitter ladder exhausted)")]
    SingularSystem,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mixing distribution {0} has no evaluable density")]
    UnsupportedMixing(String),

    #[error("penalty {0} is not supported by this operation")]
    UnsupportedPenalty(String),

    #[error("mixing distribution has no finite mean")]
    UndefinedMean,

    #[error("numerical integration failed: {0}")]
    IntegrationFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("objective became non-finite")]
    NonFiniteObjective,
}

pub type Result<T> = std::result::Result<T, Error>;
