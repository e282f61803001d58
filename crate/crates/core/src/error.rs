use thiserror::Error;

/// Errors produced by the planning toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value or document violates its contract.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed text input (raster, CSV). `line` is 1-based.
    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// Two inputs that must agree (extents, alignments) do not.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    /// Not enough data to carry out the operation.
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}
