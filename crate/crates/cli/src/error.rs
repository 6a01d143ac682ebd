use thiserror::Error;

/// Runner failures, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or inputs that do not fit together. Exit code 1.
    #[error("{0}")]
    Usage(String),

    /// Unreadable, unwritable or malformed files. Exit code 2.
    #[error("{0}")]
    Io(String),

    /// A sweep finished with some angles failed. Exit code 3.
    #[error("{0}")]
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Partial(_) => 3,
        }
    }
}

impl From<grasshopper::Error> for CliError {
    fn from(e: grasshopper::Error) -> Self {
        use grasshopper::Error as E;
        match e {
            E::Io(_) | E::Parse { .. } => CliError::Io(e.to_string()),
            E::Config(_) | E::Domain(_) | E::Shape { .. } | E::Precondition(_) => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
