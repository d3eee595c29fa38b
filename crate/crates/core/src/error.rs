//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: no tokens after whitespace stripping")]
    EmptyInput,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty sequence")]
    EmptySequence,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: String,
        left: usize,
        right: usize,
    },

    #[error("tagger unavailable: {0}")]
    TaggerUnavailable(String),

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("non-finite loss at step {step}: nll={nll} ccl={ccl} scl={scl}")]
    NonFiniteLoss {
        step: usize,
        nll: f64,
        ccl: f64,
        scl: f64,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
