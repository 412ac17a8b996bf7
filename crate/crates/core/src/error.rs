use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} vertices, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("graph size {n} exceeds the exact engine limit of {n_max}; use the mcmc sampler instead")]
    Capacity { n: usize, n_max: usize },

    #[error("degenerate posterior: every assignment has zero likelihood")]
    DegeneratePosterior,

    #[error("chain is reducible: {0}")]
    Reducible(String),

    #[error("invalid chain configuration: {0}")]
    Config(String),

    #[error("bound diverges: {0}")]
    Divergent(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Capacity { .. } => "capacity",
            Error::DegeneratePosterior => "degenerate_posterior",
            Error::Reducible(_) => "reducible",
            Error::Config(_) => "config",
            Error::Divergent(_) => "divergent",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
