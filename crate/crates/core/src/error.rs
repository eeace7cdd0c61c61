use thiserror::Error;

use crate::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: node {id} declared twice")]
    DuplicateNode { line: usize, id: u64 },

    #[error("line {line}: edge endpoint {id} is never declared")]
    UndeclaredEndpoint { line: usize, id: u64 },

    #[error("node {0} not found")]
    NodeNotFound(NodeId),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scale guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("gave up after {attempts} attempts: {what}")]
    RetriesExhausted { attempts: usize, what: String },

    #[error("deadline exceeded")]
    DeadlineExceeded,

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by bad input rather than by the engine itself.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::Io(_) | Error::DeadlineExceeded)
    }
}
