use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller misuse that is not a numeric domain problem.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("integrity error at byte offset {offset}: {detail}")]
    Integrity { offset: u64, detail: String },

    #[error("unsupported schema version {found} (this build reads version {supported})")]
    SchemaVersion { found: u32, supported: u32 },

    #[error(
        "{count} malformed rows out of {total} exceed the {limit_pct}% limit (lines {lines:?})"
    )]
    Malformed {
        count: usize,
        total: usize,
        limit_pct: f64,
        /// First offending line numbers (1-based), at most ten.
        lines: Vec<usize>,
    },

    #[error("format error: {0}")]
    Format(String),

    /// Non-finite value appeared in a forward or backward pass, or training diverged.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
