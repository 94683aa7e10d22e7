use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io { .. } => 3,
        }
    }
}

impl From<cgadam::Error> for HarnessError {
    fn from(e: cgadam::Error) -> Self {
        HarnessError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
