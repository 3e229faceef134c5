use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("symbol {symbol:?} is not observable under action {action}")]
    UnknownSymbol { action: usize, symbol: String },

    #[error("action index {0} out of range")]
    ActionOutOfRange(usize),

    #[error("malformed game spec: {0}")]
    Schema(String),

    #[error("infeasible constraint set")]
    Infeasible,

    #[error("objective is unbounded over the constraint set")]
    Unbounded,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-one update denominator {0:e} is not positive; inverse is corrupted")]
    NotPositiveDefinite(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
