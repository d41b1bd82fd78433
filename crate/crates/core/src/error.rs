use std::path::PathBuf;

use thiserror::Error;

/// Error type returned by user-supplied procedures (simulate, apply, extend, compute).
pub type BoxError = Box<dyn std::error::Error + Send + Sync + 'static>;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid name {name:?}: {reason}")]
    InvalidName { name: String, reason: &'static str },

    #[error("invalid label for {name:?}: label must be nonempty")]
    InvalidLabel { name: String },

    #[error("metric name {0:?} is reserved for the automatic computing-time metric")]
    ReservedName(String),

    #[error("duplicate {kind} name {name:?}")]
    Duplicate { kind: &'static str, name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} not yet computed: expected {path} (run `{stage}` first)")]
    NotComputed {
        what: String,
        stage: &'static str,
        path: PathBuf,
    },

    #[error("simulation {name:?} not found in {dir}")]
    SimulationNotFound { name: String, dir: PathBuf },

    #[error("simulation {name:?} already exists in {dir}")]
    SimulationExists { name: String, dir: PathBuf },

    #[error("checksum mismatch in {path}: file is corrupt")]
    Checksum { path: PathBuf },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("refusing to overwrite {path} with different content")]
    Conflict { path: PathBuf },

    #[error("rng state {found_algorithm} v{found_version} cannot be restored by {expected_algorithm} v{expected_version}")]
    RngVersion {
        found_algorithm: String,
        found_version: u32,
        expected_algorithm: &'static str,
        expected_version: u32,
    },

    #[error("model family {0:?} is not registered with this engine")]
    UnregisteredModel(String),

    #[error("stage order: {0}")]
    StageOrder(String),

    #[error("{context}: {source}")]
    Procedure {
        context: String,
        #[source]
        source: BoxError,
    },

    #[error("type error: {0}")]
    Type(String),

    #[error("predicate syntax error at offset {offset}: {message}")]
    Predicate { offset: usize, message: String },

    #[error("{0}")]
    Report(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn procedure(context: impl Into<String>, source: BoxError) -> Self {
        Error::Procedure {
            context: context.into(),
            source,
        }
    }
}
