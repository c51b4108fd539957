//! Crate-wide error type.

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value is outside the operation's accepted range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The inputs are individually valid but the requested quantity is
    /// undefined for their combination.
    #[error("domain error: {0}")]
    Domain(String),

    /// A gradient or parameter became NaN/inf.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A checkpoint file could not be parsed or has the wrong shape.
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
