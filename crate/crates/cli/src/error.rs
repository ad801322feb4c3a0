use std::fmt;
use std::process::ExitCode;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Inconsistent or invalid flags.
    Config(String),
    /// Unreadable or malformed input, or output that cannot be written.
    Data(String),
    /// A fit did not converge; the report has already been written.
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
            CliError::Convergence(_) => ExitCode::from(4),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Convergence(m) => write!(f, "convergence failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn config(msg: impl fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

pub fn data(msg: impl fmt::Display) -> CliError {
    CliError::Data(msg.to_string())
}

/// Library errors raised while validating user settings.
pub fn from_lib_config(e: wicksell::Error) -> CliError {
    match e {
        wicksell::Error::Fit(m) => CliError::Convergence(m),
        other => CliError::Config(other.to_string()),
    }
}
