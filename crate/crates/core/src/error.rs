//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside an operation's mathematical domain (e.g. a ratio
    /// outside (0, 1], a zero denominator, a composite where a prime is
    /// required).
    #[error("domain error: {0}")]
    Domain(String),

    /// The computation would exceed a documented resource bound (sieve
    /// table too large, prime-scan budget exhausted, value outside the
    /// supported machine range).
    #[error("resource error: {0}")]
    Resource(String),

    /// Malformed textual or JSON input.
    #[error("parse error: {0}")]
    Parse(String),

    /// Checkpoint state could not be written or read back; on write
    /// failure the previously committed state is left intact and resumable.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
