use std::io;

use thiserror::Error;

use crate::prefs::ArmId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid preference matrix: {0}")]
    InvalidMatrix(String),

    #[error("replay log has no remaining judgment for pair ({0}, {1})")]
    ExhaustedLog(ArmId, ArmId),

    #[error("query {0} has no relevant passages")]
    EmptyPool(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },

    #[error("worker `{worker}` is excluded: {reason}")]
    WorkerExcluded { worker: String, reason: String },

    #[error("submission rejected: {0}")]
    Rejected(String),

    #[error("corrupt campaign log: {0}")]
    CorruptLog(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
