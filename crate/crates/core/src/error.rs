use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors that abort an operation. Recoverable problems are reported as
/// [`Diagnostic`](crate::diagnostics::Diagnostic) records instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read export directory {path}: {source}")]
    ExportUnreadable { path: PathBuf, source: io::Error },

    #[error("invalid channel metadata: {0}")]
    InvalidSource(String),

    #[error("store write failed for {path}: {source}")]
    StoreWrite { path: PathBuf, source: io::Error },

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("integrity violation for {key}: catalog says {expected} bytes, found {found}")]
    Integrity {
        key: String,
        expected: u64,
        found: u64,
    },

    #[error("version ordering violated: successor at {successor} is not after {current}")]
    ModelViolation { current: String, successor: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: String, expected: u64 },

    #[error("malformed document at {pointer}: {message}")]
    Malformed { pointer: String, message: String },

    #[error("checksum mismatch: file is corrupt or truncated")]
    Checksum,

    #[error("corpus has no events")]
    EmptyCorpus,

    #[error("query has no searchable terms after normalization")]
    EmptyQuery,

    #[error("invalid interval: begin {begin} is after end {end}")]
    InvalidInterval { begin: String, end: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine code, used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ExportUnreadable { .. } => "export_unreadable",
            Error::InvalidSource(_) => "invalid_source",
            Error::StoreWrite { .. } => "store_write",
            Error::Io { .. } => "io",
            Error::Integrity { .. } => "integrity",
            Error::ModelViolation { .. } => "model_violation",
            Error::SchemaVersion { .. } => "schema_version",
            Error::Malformed { .. } => "malformed",
            Error::Checksum => "checksum",
            Error::EmptyCorpus => "empty_corpus",
            Error::EmptyQuery => "empty_query",
            Error::InvalidInterval { .. } => "invalid_interval",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
