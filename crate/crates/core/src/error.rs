use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: u64, message: String },

    #[error("empty graph")]
    EmptyGraph,

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("side assignment does not cover user `{0}`")]
    MissingAssignment(String),

    #[error("unknown side label `{0}` (expected X or Y)")]
    UnknownSide(String),

    #[error("graph too small to partition: {0} vertices")]
    GraphTooSmall(usize),

    #[error("k = {k} exceeds size {size} of side {side}")]
    HubCountTooLarge { k: usize, size: usize, side: char },

    #[error("hitting-time solve did not converge in {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("nothing to recommend for user `{0}`")]
    NothingToRecommend(String),

    #[error("no ranked lists to aggregate")]
    EmptyLists,

    #[error("{0}")]
    Precondition(String),

    #[error("missing artifact {path}; run `{stage}` first")]
    MissingArtifact { stage: &'static str, path: PathBuf },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        let path = path.into();
        // csv reports its own record position; surface it as a line-numbered error
        if let Some(pos) = source.position() {
            if !matches!(source.kind(), csv::ErrorKind::Io(_)) {
                return Error::Malformed {
                    path,
                    line: pos.line(),
                    message: source.to_string(),
                };
            }
        }
        Error::Csv { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
