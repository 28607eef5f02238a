use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyInput,

    #[error("line {line}: duplicate edge {a} - {b}")]
    DuplicateEdge { line: usize, a: String, b: String },

    #[error("line {line}: id {id:?} has conflicting ages {first} and {second}")]
    ConflictingLabel {
        line: usize,
        id: String,
        first: u32,
        second: u32,
    },

    #[error("unknown node id {0:?}")]
    UnknownId(String),

    #[error("node index {index} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("node {0} is a seed but has no label")]
    UnlabeledSeed(u32),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn malformed(line: usize, msg: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: msg.into(),
        }
    }

    /// True when the error stems from a bad parameter value rather than bad input data.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::ShapeMismatch(_) | Error::NodeOutOfRange { .. }
        )
    }
}
