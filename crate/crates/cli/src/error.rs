use std::fmt;
use std::process::ExitCode;

/// Failures mapped onto the process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or model input.
    Usage(String),
    /// Solver or simulator failure, or an output that could not be written.
    Failure(String),
    /// Validation ran but at least one criterion did not pass.
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Failure(_) => 2,
            CliError::Validation(_) => 3,
        })
    }

    pub fn io(what: &std::path::Path, e: impl fmt::Display) -> Self {
        CliError::Failure(format!("cannot write {}: {e}", what.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<aoi_mfq::Error> for CliError {
    fn from(e: aoi_mfq::Error) -> Self {
        use aoi_mfq::Error as E;
        match e.root() {
            E::Dimension(_) | E::Domain { .. } | E::InvalidDistribution(_) | E::InvalidSpec(_) | E::Unsupported(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}
