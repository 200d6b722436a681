use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = BoolnetError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BoolnetError {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A dataset or artifact could not be read or is malformed.
    #[error("cannot ingest {}: {message}", path.display())]
    Ingestion { path: PathBuf, message: String },

    /// Writing an output failed.
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] boolnet_core::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl BoolnetError {
    pub fn ingestion(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        BoolnetError::Ingestion {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        BoolnetError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Process exit code: 2 for configuration, 3 for ingestion, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BoolnetError::Config(_) | BoolnetError::Core(boolnet_core::Error::Config(_)) => 2,
            BoolnetError::Ingestion { .. } => 3,
            _ => 4,
        }
    }
}
