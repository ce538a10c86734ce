use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight list is empty after removing zero weights")]
    DegenerateWeights,

    #[error("invalid weight {value} in field `{field}`")]
    InvalidWeight { field: &'static str, value: f64 },

    #[error("invalid tail: {0}")]
    InvalidTail(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operation needs a finite weight list")]
    InfiniteUnsupported,

    #[error("invalid periodic profile: {0}")]
    InvalidProfile(String),

    #[error("invalid distribution: {0}")]
    InvalidModel(String),

    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),

    #[error("{count} branches exceed the enumeration cap {cap}")]
    CapExceeded { count: f64, cap: usize },

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },

    #[error("root finder stalled with residual {residual:e} above tolerance {tol:e}")]
    NoConvergence { residual: f64, tol: f64 },

    #[error("family member rejected: {0}")]
    Member(String),
}

pub type Result<T> = std::result::Result<T, Error>;
