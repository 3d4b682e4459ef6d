use thiserror::Error;

/// Errors raised by the vortex library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VortexError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity is singular at the requested point.
    #[error("pole at x = {x}: {what}")]
    Pole { x: f64, what: String },

    /// An iterative procedure ran out of iterations.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A series evaluation exceeded its term cap.
    #[error("series did not converge within {terms} terms")]
    SeriesDivergence { terms: usize },

    /// Adaptive quadrature could not meet its tolerance.
    #[error("quadrature did not converge (error estimate {estimate:e})")]
    QuadratureDivergence { estimate: f64 },

    /// Least-squares fit is degenerate.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Malformed solution file or export.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for VortexError {
    fn from(e: std::io::Error) -> Self {
        VortexError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for VortexError {
    fn from(e: serde_json::Error) -> Self {
        VortexError::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, VortexError>;
