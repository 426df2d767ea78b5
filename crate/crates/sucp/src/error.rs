use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: zero valid rows")]
    ZeroValidRows { path: PathBuf },

    #[error("preprocessing removed all data (min_user_checkins={min_user}, min_poi_checkins={min_poi})")]
    EmptyAfterPreprocess { min_user: u32, min_poi: u32 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("matrix factorization diverged in {context}: loss non-finite at epoch {epoch}")]
    MfDiverged { context: String, epoch: usize },

    #[error("unknown user id {0:?}")]
    UnknownUser(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no evaluable users (every test set empty)")]
    NoEvaluableUsers,

    #[error("cache artifact corrupt: {path}: {msg}")]
    CacheCorrupt { path: PathBuf, msg: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
