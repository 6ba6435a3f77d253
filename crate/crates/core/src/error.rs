use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("patterns, masks or weights are defined on different grids")]
    GridMismatch,

    #[error("grid has no valid points")]
    NoValidPoints,

    #[error("region of interest is empty")]
    EmptyRoi,

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("expected {expected} element weights, got {got}")]
    WeightCount { expected: usize, got: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
