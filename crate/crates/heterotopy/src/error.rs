use thiserror::Error;

/// Library error type; variants mirror the failure classes of the public
/// operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("chart error: {0}")]
    Chart(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("surgery error: {0}")]
    Surgery(String),
    #[error("composition error: {0}")]
    Composition(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
