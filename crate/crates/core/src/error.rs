use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("field GF(2^{w}) has {size} elements but {needed} distinct points are required; use a larger extension degree")]
    FieldTooSmall { w: u32, size: usize, needed: usize },

    #[error("coloring is not proper for this instance")]
    ImproperColoring,

    #[error("coloring assigns different colors to nodes that want the same message {message}")]
    InconsistentColoring { message: usize },

    #[error("decode verification failed for user {user}: {detail}")]
    DecodeFailure { user: usize, detail: String },

    #[error("instance too large for exhaustive search: {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
