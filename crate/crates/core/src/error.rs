use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite: {0}")]
    Definiteness(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("SR decomposition broke down at column pair {pair} (pivot {pivot:.3e})")]
    SrBreakdown { pair: usize, pivot: f64 },

    #[error("orthogonal-complement frame construction failed: {0}")]
    Frame(String),

    #[error("retraction undefined for this step: {0}")]
    RetractionDomain(String),

    #[error("operation requires a different metric: {0}")]
    WrongMetric(String),

    #[error("direct Newton solve failed: {0}")]
    DirectSolve(String),

    #[error("ill-conditioned input: {0}")]
    IllConditioned(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix market, line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
