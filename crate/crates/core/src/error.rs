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

    #[error("line {line}: malformed JSON: {message}")]
    MalformedJson { line: usize, message: String },

    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: String },

    #[error("line {line}: unrecognized label value {value} in field `{field}`")]
    UnknownLabel {
        line: usize,
        field: String,
        value: String,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("token `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("loss became NaN at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("both classes are required, only one present")]
    SingleClass,

    #[error(
        "memory guard: estimated {estimated_mb:.1} MiB exceeds budget of {budget_mb} MiB ({what})"
    )]
    MemoryBudget {
        estimated_mb: f64,
        budget_mb: u64,
        what: String,
    },

    #[error("invalid feature file {path}: {message}")]
    FeatureFile { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
