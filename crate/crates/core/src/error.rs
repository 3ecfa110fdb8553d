use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("implicit step {step} did not converge (last update {residual:e})")]
    StepFailure { step: usize, residual: f64 },

    #[error("unsupported degree {0}: coefficient extraction is capped at 12")]
    UnsupportedDegree(usize),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("ill-conditioned: {0}")]
    Conditioning(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
