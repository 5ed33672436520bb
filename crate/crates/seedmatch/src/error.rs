use thiserror::Error;

/// Errors produced by graph loading, model sampling, and the matchers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("label sets have empty intersection")]
    EmptyIntersection,

    #[error("unrevealed set is empty")]
    EmptyUnrevealed,

    #[error("{0} exceeds the supported size: {1}")]
    SizeGuard(&'static str, usize),

    #[error("lp solver failed: {0}")]
    LpBackend(String),
}

pub type Result<T> = std::result::Result<T, Error>;
