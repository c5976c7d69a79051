use std::path::PathBuf;

/// Errors produced by the approximation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("sample source returned non-finite value {value} at sample {index}")]
    SampleEvaluation { index: usize, value: f64 },

    #[error("no N up to {cap} satisfies the shape-parameter lower bound")]
    ScanLimit { cap: usize },

    #[error("rule-of-thumb ratio is undefined for a zero coefficient vector")]
    UndefinedRatio,

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
