use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fractional order must satisfy 0 < alpha < 1, got {0}")]
    InvalidOrder(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {t} outside [{lo}, {hi}]")]
    OutsideGrid { t: f64, lo: f64, hi: f64 },

    #[error("support condition violated: {0}")]
    Support(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("singular step system at node {node}")]
    Singular { node: usize },

    #[error("linear solve at node {node} left relative residual {residual:e}")]
    SolveTolerance { node: usize, residual: f64 },

    #[error("argument outside validated range: {0}")]
    OutOfRange(String),

    #[error("incompatible inputs: {0}")]
    Incompatible(String),
}
