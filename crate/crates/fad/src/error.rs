use std::io;
use std::path::PathBuf;

/// Errors of the file formats, benchmark runner and command line.
#[derive(Debug, thiserror::Error)]
pub enum FadError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: row {row}, column {col}: cannot parse '{value}' as a number", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Core(#[from] fad_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl FadError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        FadError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        FadError::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, FadError>;
