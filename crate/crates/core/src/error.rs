use std::path::PathBuf;

use thiserror::Error;

/// Failure categories, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("unknown state id {0}")]
    UnknownState(usize),

    #[error("unknown action id {0}")]
    UnknownAction(usize),

    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no error samples to estimate a model from")]
    NoSamples,

    #[error("empty record set")]
    EmptyRecords,

    #[error("AUC undefined: records contain a single outcome class")]
    SingleClass,

    #[error("distribution is not normalized (total mass {0})")]
    Unnormalized(f64),

    #[error("missing table entry for state {state}, action {action}")]
    MissingEntry { state: usize, action: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed artifact {path}: {msg}")]
    Artifact { path: PathBuf, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) | Error::TooLarge(_) => {
                ErrorKind::Runtime
            }
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
