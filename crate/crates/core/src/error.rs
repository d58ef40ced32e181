use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("element construction failed: {0}")]
    Element(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
