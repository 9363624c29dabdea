use std::fmt;
use std::io;
use std::process::ExitCode;

/// Failures that stop a command, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config: exit 2.
    Usage(String),
    /// Non-finite energies, non-convergence or I/O: exit 3.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Run(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Run(msg) => write!(f, "run failed: {msg}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<tfdw_core::Error> for CliError {
    fn from(e: tfdw_core::Error) -> Self {
        match e {
            tfdw_core::Error::Domain(_) | tfdw_core::Error::Parse { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Run(other.to_string()),
        }
    }
}
