use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, e.g. a grid depth outside the supported range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numeric argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Sizes of grid, index or colouring do not agree.
    #[error("shape mismatch: {what} (expected {expected}, found {found})")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// The hypothesis of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed grid, colouring or cache file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
