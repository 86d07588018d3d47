use std::process::ExitCode;

/// Failure classes mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed inputs.
    #[error("{0:#}")]
    Input(anyhow::Error),
    /// Invalid configuration file, flag values, or scenario parameters.
    #[error("{0:#}")]
    Config(anyhow::Error),
    /// Inputs are readable but leave nothing to analyze.
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::Degenerate(_) => 3,
        })
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a fallible result with an error class and a context line.
pub trait Classify<T> {
    fn input(self, context: impl FnOnce() -> String) -> CliResult<T>;
    fn config(self, context: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self, context: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::Input(e.into().context(context())))
    }

    fn config(self, context: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::Config(e.into().context(context())))
    }
}
