use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed JSON: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("document {doc_id}, mention {mention_id}: {message}")]
    InvalidMention {
        doc_id: String,
        mention_id: String,
        message: String,
    },

    #[error("document {doc_id}: {message}")]
    InvalidDocument { doc_id: String, message: String },

    #[error("empty entity id")]
    EmptyEntityId,

    #[error("unknown mention {doc_id}/{mention_id} in predictions")]
    UnknownMention { doc_id: String, mention_id: String },

    #[error("store file {file}: {message}")]
    Store { file: String, message: String },

    #[error("statistics built with different constants: {0}")]
    ConstantMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no evaluable mentions")]
    NoEvaluableMentions,

    #[error("nothing to train on: no mention has its gold entity in its candidate list")]
    NothingToTrainOn,

    #[error("model file: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
