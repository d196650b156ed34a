use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid operator parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The exponent requested is not defined for these arguments (e.g. `d <= 2s`).
    #[error("undefined exponent: {0}")]
    UndefinedExponent(String),

    #[error("parameter outside admissible range: {0}")]
    ParameterDomain(String),

    #[error("unsupported dimension {0} (only d = 1 is supported here)")]
    UnsupportedDimension(usize),

    #[error("Picard map is not contracting (measured ratio {ratio:.4e} after {iterations} iterations)")]
    ContractionFailure { ratio: f64, iterations: usize },

    #[error("Picard iteration did not converge in {iterations} iterations (last distance {distance:.3e})")]
    NoConvergence { iterations: usize, distance: f64 },

    #[error("non-finite values produced by the time step")]
    Overflow,

    #[error("cutoff construction error: {0}")]
    Cutoff(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("window error: {0}")]
    Window(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
