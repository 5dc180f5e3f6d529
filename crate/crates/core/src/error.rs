use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sdf parse error: {0}")]
    Sdf(String),
    #[error("graph json error: {0}")]
    GraphJson(String),
    #[error("invalid chemical graph: {0}")]
    InvalidGraph(String),
    #[error("no interior: {0}")]
    NoInterior(String),
    #[error("out-of-dictionary descriptor: {0}")]
    OutOfDictionary(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("regression error: {0}")]
    Regress(String),
    #[error("specification error: {0}")]
    Spec(String),
    #[error("milp build error: {0}")]
    MilpBuild(String),
    #[error("solution error: {0}")]
    Solution(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
