//! Crate-wide error type.

use std::time::Duration;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by tree operations, providers, and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A referenced entity (node, template, file entry) does not exist.
    #[error("not found: {0}")]
    NotFound(String),

    /// An operation was attempted in a state that forbids it.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The chat backend could not be reached after exhausting retries.
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),

    /// The chat backend did not answer within the configured timeout.
    #[error("provider timeout after {0:?}")]
    Timeout(Duration),

    /// A dataset file failed validation; `line` is 1-based.
    #[error("dataset error at line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Serialization or deserialization of an artifact file failed.
    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn not_found(msg: impl Into<String>) -> Self {
        Error::NotFound(msg.into())
    }

    pub fn invalid_state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }
}
