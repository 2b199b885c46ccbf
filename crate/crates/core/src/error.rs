use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("{path}: line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: line {line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("{path}: line {line}: judgment {value} is not on the annotation grid")]
    JudgmentOffGrid { path: PathBuf, line: usize, value: f64 },

    #[error("cannot split {samples} samples into {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },

    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("mask is not a prefix of ones")]
    InvalidMask,

    #[error("every position of the sequence is masked")]
    AllMasked,

    #[error("probability {0} is outside the open interval (0, 1]")]
    DomainError(f64),

    #[error("forward cache does not match the parameters")]
    StaleCache,

    #[error("{0} set is empty")]
    EmptySet(&'static str),

    #[error("empty input")]
    EmptyInput,

    #[error("id sets differ: {0}")]
    IdMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: &[usize], found: &[usize]) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Artifact {
            path: path.into(),
            message: message.into(),
        }
    }
}
