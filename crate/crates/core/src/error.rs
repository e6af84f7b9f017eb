//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value is out of its documented domain.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// A numeric routine failed to converge or produced a non-finite value.
    #[error("numeric failure in {context}: {reason}")]
    Numeric {
        context: &'static str,
        reason: String,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("scenario schema: {0}")]
    Schema(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    pub fn numeric(context: &'static str, reason: impl Into<String>) -> Self {
        Error::Numeric {
            context,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
