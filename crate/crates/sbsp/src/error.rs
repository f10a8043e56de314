//! Crate-wide error type.
//!
//! Variants are grouped by where the failure originates so that callers
//! (notably the CLI) can map them onto coarse exit categories: invalid
//! caller input, malformed or inconsistent data, and numerical failures.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition (bad hyperparameter
    /// range, day index out of bounds, malformed configuration).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data could not be parsed. Carries the 1-based line number of
    /// the offending record.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input data parsed but violates a structural requirement
    /// (non-contiguous days, counts outside the declared window, ...).
    #[error("invalid data: {0}")]
    Data(String),

    /// An optimizer or estimator failed to produce a finite answer.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The requested target cannot be reached within the search horizon.
    #[error("saturation: {0}")]
    Saturation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn saturation(msg: impl Into<String>) -> Self {
        Error::Saturation(msg.into())
    }
}
