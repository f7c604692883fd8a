use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Parse failures carry the zero-based record index they refer to; the
/// file path is attached by [`Error::in_file`] at the I/O boundary.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown class {0:?}")]
    ClassNotFound(String),

    #[error("invalid class catalog: {0}")]
    InvalidCatalog(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("record {record}: {message}")]
    Record { record: usize, message: String },

    #[error("record {record}: dangling {kind} reference {id}")]
    DanglingReference {
        record: usize,
        kind: &'static str,
        id: i64,
    },

    #[error("declared {declared} points but found {actual}")]
    CountMismatch { declared: usize, actual: usize },

    #[error("truncated binary payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("unsupported field layout: {0}")]
    UnsupportedLayout(String),

    #[error("{0}")]
    Evaluation(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn record(record: usize, message: impl Into<String>) -> Self {
        Error::Record {
            record,
            message: message.into(),
        }
    }

    /// Attaches a file path to this error.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::File { .. } => self,
            other => Error::File {
                path: path.into(),
                source: Box::new(other),
            },
        }
    }

    /// True when the root cause is an operating-system I/O failure rather
    /// than invalid content.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::File { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
