use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("action lies outside the spanner span (residual {residual:.3e})")]
    Decomposition { residual: f64 },

    #[error("round {round} exceeds horizon {horizon}")]
    HorizonExceeded { round: u64, horizon: u64 },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("audit failed: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
