use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module.
///
/// The categories map one-to-one onto CLI exit statuses, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// Bad arguments or out-of-range parameters supplied by the caller.
    #[error("invalid input: {0}")]
    Validation(String),
    /// The request is valid but exceeds a configured size or enumeration budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// An exact verification of a mathematical claim failed.
    #[error("integrity check failed: {0}")]
    Integrity(String),
    /// Exact arithmetic would have overflowed the 128-bit integer range.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Capacity(_) => 3,
            Error::Integrity(_) => 4,
            Error::Overflow(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
