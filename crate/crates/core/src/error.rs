use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input object violates its invariants.
    #[error("validation error: {0}")]
    Validation(String),
    /// An operation was called with a configuration it does not accept.
    #[error("usage error: {0}")]
    Usage(String),
    /// Adaptive truncation could not reach the tail-mass target below the cap.
    #[error("truncation error: tail mass {tail:e} at n_max = {cap} exceeds {target:e}")]
    Truncation { cap: usize, tail: f64, target: f64 },
    /// Click statistics cannot be inverted under the two-photon support assumption.
    #[error("inversion error: {0}")]
    Inversion(String),
    /// Malformed time-tag or config file.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Validation(_) => "validation",
            Error::Usage(_) => "usage",
            Error::Truncation { .. } => "truncation",
            Error::Inversion(_) => "inversion",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
