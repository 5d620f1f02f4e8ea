use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("orbit diverged at step {step} (|state| = {norm:e})")]
    Divergence { step: usize, norm: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular observation at index {index}: state coincides with the reference point")]
    SingularObservation { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("too few data points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("fit failed: {reason}")]
    Fit {
        reason: String,
        best: Option<Vec<f64>>,
    },

    #[error("estimator degenerate: {0}")]
    EstimatorDegenerate(String),

    #[error("inversion error: {0}")]
    Inversion(String),

    #[error("verification error: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
