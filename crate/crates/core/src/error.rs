use std::path::PathBuf;

use crate::genome::GenomeError;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}: no such file")]
    MissingFile { path: PathBuf },

    #[error("{path}: line {line}: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: line {line}: non-finite value in column `{column}`")]
    NonFinite {
        path: PathBuf,
        line: usize,
        column: &'static str,
    },

    #[error("{path}: line {line}: sample index {found} breaks the contiguous sequence (expected {expected})")]
    NonContiguous {
        path: PathBuf,
        line: usize,
        expected: u64,
        found: u64,
    },

    #[error("{path}: dataset contains no samples")]
    EmptyDataset { path: PathBuf },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error(transparent)]
    Genome(#[from] GenomeError),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("all species went extinct")]
    Extinction,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
