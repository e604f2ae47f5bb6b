use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum PivError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PivError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PivError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class: 1 config, 2 I/O, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            PivError::Config(_) | PivError::Parameter(_) | PivError::Dimension(_) => 1,
            PivError::Io { .. } | PivError::Format(_) => 2,
            PivError::Numeric(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, PivError>;
