use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("every weight is zero")]
    AllZeroWeights,

    #[error("weight {index} is not a finite non-negative number ({value})")]
    NonFiniteWeight { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("rejection sampling gave up after {attempts} consecutive misses")]
    RejectionBudgetExceeded { attempts: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("covariance stayed indefinite after {retries} ridge increases")]
    CholeskyRetriesExhausted { retries: usize },

    #[error("sensor reading must be positive, got {0}")]
    NonPositiveReading(f64),

    #[error("empty trial set")]
    EmptyTrialSet,

    #[error("invalid config: {field}: {message}")]
    InvalidConfig { field: String, message: String },
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}
