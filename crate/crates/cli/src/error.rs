use std::process::ExitCode;

use fdi_growth::ModelError;
use thiserror::Error;

/// Everything that can stop a command. Each variant maps to one exit code
/// and renders as a single `error[kind]: ...` line.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    /// A solver failure after the inputs were accepted.
    #[error("{0}")]
    Model(ModelError),
    /// Results exist but violate a contract of the command.
    #[error("{0}")]
    Contract(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Model(ModelError::Domain(_)) => "domain",
            CliError::Model(ModelError::Precondition(_)) => "precondition",
            CliError::Model(ModelError::Numerical(_)) => "numerical",
            CliError::Contract(_) => "numerical",
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => ExitCode::from(2),
            CliError::Model(_) | CliError::Contract(_) => ExitCode::from(3),
        }
    }

    /// The diagnostic as one line.
    pub fn line(&self) -> String {
        let msg = self.to_string();
        let flat: Vec<&str> = msg.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        format!("error[{}]: {}", self.kind(), flat.join(" | "))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e)
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
