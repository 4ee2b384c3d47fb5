//! Crate-wide error type.
//!
//! Errors are grouped by the failure class they report so that callers
//! (notably the CLI) can map them to distinct exit codes without string
//! matching on messages.

use thiserror::Error;

/// All fallible operations in this crate return this error.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad hyperparameters, inconsistent schedule,
    /// out-of-range knobs.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid data: malformed files, dimension mismatches, broken
    /// container invariants, non-finite values.
    #[error("data error: {0}")]
    Data(String),

    /// Numeric failure during computation, e.g. a training loss that
    /// became NaN or infinite.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
