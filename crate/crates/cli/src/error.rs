use thiserror::Error;

/// Failure modes of a subcommand, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Compute(#[from] plate_lab::Error),

    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Output(_) => 2,
            CliError::Compute(plate_lab::Error::Validation { .. } | plate_lab::Error::Alignment { .. }) => 2,
            CliError::Assertion(_) | CliError::Compute(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
