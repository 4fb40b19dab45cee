use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsarError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("induction impossible: {0}")]
    InductionImpossible(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CsarError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CsarError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CsarError> = std::result::Result<T, E>;
