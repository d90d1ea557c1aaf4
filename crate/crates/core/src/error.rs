//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A row of an input file could not be decoded.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Input violates a structural requirement (e.g. non-uniform timestamps).
    #[error("format error: {0}")]
    Format(String),

    /// Not enough samples to perform the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A series cannot be repaired (e.g. every sample missing).
    #[error("unrecoverable data: {0}")]
    UnrecoverableData(String),

    /// An argument is outside the operation's accepted range.
    #[error("invalid parameter `{name}`: {msg}")]
    Parameter { name: &'static str, msg: String },

    /// Caller broke an internal contract (mismatched axes, wrong pairing).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A sample value makes the computation meaningless (e.g. V <= 0).
    #[error("data error: {0}")]
    Data(String),

    /// Ridge extraction found nothing to extract.
    #[error("no ridge: {0}")]
    NoRidge(String),

    /// Entropy of an identically-zero distribution.
    #[error("undefined entropy: {0}")]
    UndefinedEntropy(String),

    /// A pipeline stage failed; carries enough context to act on.
    #[error("stage `{stage}` failed for branch `{branch}`: {source} (hint: {hint})")]
    Stage {
        stage: String,
        branch: String,
        hint: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn parameter(name: &'static str, msg: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            msg: msg.into(),
        }
    }

    /// Wrap an error with pipeline stage context.
    pub fn in_stage(self, stage: &str, branch: &str, hint: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            branch: branch.to_string(),
            hint: hint.to_string(),
            source: Box::new(self),
        }
    }
}
