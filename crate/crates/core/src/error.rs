use thiserror::Error;

/// Errors raised by oracles, estimators and the reconstruction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported scale: {what} = {value} exceeds limit {limit}")]
    UnsupportedScale {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// A resolved partial-tree node was asked to take a different value.
    #[error("write-once violation: {0}")]
    WriteOnce(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_scale(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        Err(Error::UnsupportedScale { what, value, limit })
    } else {
        Ok(())
    }
}
