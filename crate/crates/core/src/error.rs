use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the mining pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },

    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },

    #[error("unknown label type `{0}`")]
    UnknownLabelType(String),

    #[error("index {index} out of range for document of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("span [{start}, {end}) out of bounds for document `{doc_id}` of length {len}")]
    SpanOutOfBounds {
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("spans are not sorted by start offset")]
    UnsortedSpans,

    #[error("invalid n-gram range: n_min = {n_min}, n_max = {n_max}")]
    InvalidNgramRange { n_min: usize, n_max: usize },

    #[error("record has no dynasty; Table 1 classification needs one")]
    MissingDynasty,

    #[error("usage probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("character statistics are empty; compute them before enabling group 4")]
    EmptyCharStats,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("objective became non-finite at iteration {0}")]
    NonFinite(usize),

    #[error("no training examples")]
    NoExamples,

    #[error("model file format version {found} is not supported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("malformed model: {0}")]
    Model(String),

    #[error("{0}")]
    Invalid(String),

    #[error("zero verifiable name pairs")]
    NoVerifiablePairs,

    #[error("empty candidate list")]
    NoCandidates,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}
