use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Solver(#[from] clustergap_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl LabError {
    /// Process exit code: 1 for bad input, 2 for everything that failed
    /// while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Syntax { .. } | LabError::Validation(_) => 1,
            LabError::Solver(clustergap_core::Error::InvalidConfig(_)) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
