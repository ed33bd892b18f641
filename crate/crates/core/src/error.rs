use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown config key `{key}` (line {line})")]
    UnknownKey { key: String, line: usize },

    #[error("bad value for config key `{key}`: {reason}")]
    BadValue { key: String, reason: String },

    #[error("non-finite state at step {step}: {what}")]
    NonFinite { step: u64, what: String },

    #[error("invariant breach at step {step}: {what}")]
    Invariant { step: u64, what: String },

    #[error("invalid transition request: {0}")]
    InvalidTransition(String),

    #[error("fluctuation function is zero; series is constant")]
    ConstantSeries,

    #[error("series too short: need {needed}, have {have}")]
    TooShort { needed: usize, have: usize },

    #[error("power-law fit diverges: all samples equal x_min")]
    DivergentFit,

    #[error("{0}")]
    Analysis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed CSV at line {line}: {reason}")]
    Csv {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
