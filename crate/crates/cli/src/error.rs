use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type LabResult<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Model(#[from] block_potts::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn is_validation(&self) -> bool {
        match self {
            LabError::Model(e) => e.is_validation(),
            LabError::Config(_) => true,
            LabError::Io { .. } | LabError::Json(_) => false,
        }
    }

    /// 1 for rejected input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            1
        } else {
            2
        }
    }
}
