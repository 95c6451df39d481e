use std::fmt;

/// Exit code 2 for usage errors, 1 for everything else.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// A validation suite or check failed.
    Check(String),
    Run(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) | CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Run(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<cvqkd_core::Error> for CliError {
    fn from(e: cvqkd_core::Error) -> Self {
        match e {
            cvqkd_core::Error::Parameter(m) => CliError::Usage(m),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Run(e.to_string())
    }
}
