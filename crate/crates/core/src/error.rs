use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input text is empty")]
    EmptyInput,

    #[error("lexicon parse error at line {line}, column {column}: {message}")]
    LexiconParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("lexicon entry {index}: {message}")]
    LexiconValidation { index: usize, message: String },

    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("embedding has zero norm")]
    ZeroNorm,

    #[error("state entry {index} has non-positive or non-finite weight {weight}")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("no interpretations could be parsed from model response: {raw:?}")]
    MalformedResponse { raw: String },

    #[error("no fixture found for {key:?}")]
    FixtureNotFound { key: String },

    #[error("invalid fixture {path}: {message}")]
    FixtureInvalid { path: PathBuf, message: String },

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("provider returned HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },

    #[error("missing secret: environment variable {0} is not set")]
    MissingSecret(String),

    #[error("corpus line {line}: {message}")]
    CorpusSchema { line: usize, message: String },

    #[error("operator stage {stage} violated the state contract: {reason}")]
    StageContract { stage: String, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
