//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A standing hypothesis is violated (parities, coprimality, ranges).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A requested tolerance cannot be certified within configured limits.
    #[error("tolerance unachievable: {0}")]
    ToleranceUnachievable(String),

    /// Tables are not deep enough for the requested computation.
    #[error("insufficient table depth: {0}")]
    TableDepth(String),

    /// Malformed external data (seed files, config files).
    #[error("parse error: {0}")]
    Parse(String),

    /// An internal consistency check failed; this signals a bug, not a math case.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
