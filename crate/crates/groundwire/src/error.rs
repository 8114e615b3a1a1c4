//! Crate error type. Module-specific failures nest under one enum so that
//! the binary and examples only deal with a single `Result` alias.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // --- store ---------------------------------------------------------
    #[error("malformed record at line {line} in {file}: {reason}")]
    MalformedRecord {
        file: String,
        line: usize,
        reason: String,
    },

    #[error("unknown chunk id: {0}")]
    UnknownChunk(String),

    #[error("duplicate chunk id: {0}")]
    DuplicateChunk(String),

    // --- retrieval -----------------------------------------------------
    #[error("lexical index is empty; build it before searching")]
    EmptyIndex,

    #[error("embedder failed: {0}")]
    EmbedderFailure(String),

    #[error("entity extractor failed: {0}")]
    ExtractorFailure(String),

    #[error("{component} timed out after {ms} ms")]
    Timeout { component: String, ms: u64 },

    // --- reward --------------------------------------------------------
    #[error("judge transport unavailable: {0}")]
    JudgeUnavailable(String),

    #[error("judge returned unparseable output after retry: {raw}")]
    JudgeParseError { raw: String },

    // --- training ------------------------------------------------------
    #[error("advantage group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),

    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: usize },

    #[error("environment spec invalid: {0}")]
    BadEnvironment(String),

    // --- eval / serve ---------------------------------------------------
    #[error("evaluation case set is empty")]
    EmptyCaseSet,

    #[error("generator unavailable: {0}")]
    GeneratorUnavailable(String),

    // --- plumbing --------------------------------------------------------
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
