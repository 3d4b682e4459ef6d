use thiserror::Error;
use vortex_core::VortexError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    NonConvergence(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<VortexError> for CliError {
    fn from(e: VortexError) -> Self {
        match e {
            VortexError::NonConvergence { .. }
            | VortexError::SeriesDivergence { .. }
            | VortexError::QuadratureDivergence { .. } => CliError::NonConvergence(e.to_string()),
            VortexError::Io(_) => CliError::Io(e.to_string()),
            VortexError::Domain(_)
            | VortexError::Pole { .. }
            | VortexError::DegenerateFit(_)
            | VortexError::Format(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
