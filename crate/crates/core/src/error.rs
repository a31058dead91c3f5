use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no candidates")]
    NoCandidates,

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("cannot select k={k} out of n={n} items")]
    InvalidSelection { k: usize, n: usize },

    #[error("positive score violates Dijkstra precondition (cell {cell}, score {score})")]
    PositiveScore { cell: usize, score: f64 },

    #[error("enumeration too large: more than {limit} actions")]
    EnumerationTooLarge { limit: usize },

    #[error("infeasible action: {0}")]
    InfeasibleAction(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("instance too large for exhaustive search: n={n} exceeds {max}")]
    InstanceTooLarge { n: usize, max: usize },

    #[error("cannot sample {requested} transitions from a buffer holding {available}")]
    InsufficientSamples { requested: usize, available: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
