use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-integrable weight: alpha*p + n = {0} <= 0")]
    NonIntegrableWeight(String),
    #[error("polar node at radius {radius} lies outside the admissible box region (limit {limit})")]
    NodeOutsideBox { radius: f64, limit: f64 },
    #[error("negative time t = {0}")]
    NegativeTime(f64),
    #[error("component count mismatch: expected {expected}, got {got}")]
    Components { expected: usize, got: usize },
    #[error("derivative order {0} too high for the grid (max 4)")]
    OrderTooHigh(u32),
    #[error("unsupported dilation factor {0}")]
    UnsupportedDilation(f64),
    #[error("inadmissible indices: {0}")]
    Inadmissible(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("magic mismatch: expected NSRA1 header")]
    MagicMismatch,
    #[error("size mismatch: expected {expected} bytes of data, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
