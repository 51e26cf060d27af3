use thiserror::Error;

/// Errors produced by construction, evaluation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument has the wrong shape or is outside its documented range.
    #[error("invalid input: {0}")]
    Input(String),

    /// A point or parameter lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A document could not be decoded.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// A memorizer was asked to fit more samples than its shape allows.
    #[error("capacity exceeded: {requested} samples requested, capacity is {capacity}")]
    Capacity { requested: usize, capacity: i64 },

    /// A build would exceed the configured lattice cap.
    #[error("resource cap exceeded: {requested} lattice points requested, cap is {cap}")]
    Resource { requested: u128, cap: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
