use thiserror::Error;

/// Errors raised while evaluating or verifying entries.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A denominator vanished at the requested evaluation point.
    #[error("resonance: {0}")]
    Resonance(String),
    /// A series denominator vanished before the numerator truncated it.
    #[error("regularization required: {0}")]
    Regularization(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for the errors caused by a singular evaluation point.
    pub fn is_resonance(&self) -> bool {
        matches!(self, Error::Resonance(_) | Error::Regularization(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
