//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad data handed to an operation (out-of-range index, malformed labels, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value violates its contract.
    #[error("config error: {0}")]
    Config(String),

    /// Two parties disagree on layout or protocol state.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A numerical routine failed to converge or produced non-finite values.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Noise calibration could not reach the requested budget.
    #[error(
        "calibration error: target epsilon {target} unreachable; feasible range \
         [{feasible_min:.6}, {feasible_max:.6}] for the given (q, T, delta)"
    )]
    Calibration {
        target: f64,
        feasible_min: f64,
        feasible_max: f64,
    },

    /// Corpus generation could not satisfy its spec.
    #[error("generation error: {0}")]
    Generation(String),

    /// A dataset is too small to be divided as requested.
    #[error("split error: {0}")]
    Split(String),

    /// Malformed text input, with the 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
