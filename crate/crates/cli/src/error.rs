use std::fmt;

/// Failure classes of the command-line tool, each with its exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed or unknown configuration.
    Config(String),
    /// A well-formed configuration describing an invalid model.
    Validation(String),
    /// Failure while simulating or solving.
    Runtime(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }

    pub fn validation(e: spsim_core::SpError) -> Self {
        CliError::Validation(e.to_string())
    }

    pub fn runtime(e: spsim_core::SpError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<spsim_core::SpError> for CliError {
    /// Argument and grid errors are configuration problems; the rest arise
    /// while computing.
    fn from(e: spsim_core::SpError) -> Self {
        use spsim_core::SpError::*;
        match e {
            InvalidArgument(_) | InvalidModel(_) | Unstable(_) | DomainTooSmall(_) | OutOfDomain(_) => {
                CliError::validation(e)
            }
            _ => CliError::runtime(e),
        }
    }
}
