use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph is not acyclic")]
    Cyclic,

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("conditioning event has zero probability")]
    ZeroProbability,

    #[error("relative entropy is infinite: q vanishes where p is positive (state {state})")]
    SupportViolation { state: usize },

    #[error("optimizer did not converge after {iterations} iterations (best value {best})")]
    NotConverged { iterations: usize, best: f64 },

    #[error("importance weight overflow (log2 weight {log2_weight})")]
    WeightOverflow { log2_weight: f64 },

    #[error("{lemma}: {message}")]
    BoundDomain { lemma: &'static str, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors raised when a request exceeds a hard size cap.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity(_))
    }

    /// True for malformed user input (config or network files).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Config(_))
    }
}
