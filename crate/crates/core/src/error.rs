use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or hyperparameters that can never produce a valid computation.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    Shape {
        op: &'static str,
        expected: String,
        actual: String,
    },

    #[error("schema error in {dataset}: mapped column `{column}` not found in header")]
    MissingColumn { dataset: String, column: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error in {dataset}: {reason}")]
    Data { dataset: String, reason: String },

    #[error("client {client_id} failed during round {round}: {source}")]
    Client {
        client_id: usize,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("federation protocol error: {0}")]
    Protocol(String),

    #[error("invalid experiment spec: {0}")]
    Validation(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error at {path}: {source}")]
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
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(dataset: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Data {
            dataset: dataset.into(),
            reason: reason.into(),
        }
    }
}
