use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown operator {found:?} at byte {offset}")]
    UnknownOperator { offset: usize, found: char },

    #[error("unknown edge label `{0}`")]
    UnknownLabel(String),

    #[error("unknown vertex label `{0}`")]
    UnknownVertexLabel(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),

    #[error("grid `{0}` already exists")]
    NameCollision(String),

    #[error("grid `{grid}` has no {dir} slices")]
    MissingDirection { grid: String, dir: &'static str },

    #[error("corrupt store: {0}")]
    CorruptStore(String),

    #[error("segment pool exhausted: capacity {capacity} bytes, demand {demand} bytes")]
    PoolExhausted { capacity: usize, demand: usize },

    #[error("budget unsatisfiable: {0}")]
    UnsatisfiableBudget(String),

    #[error("vertex {vertex} outside segment range [{lo}, {hi})")]
    OutOfRange { vertex: u32, lo: u32, hi: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn syntax(offset: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            offset,
            message: message.into(),
        }
    }
}
