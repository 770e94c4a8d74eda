use thiserror::Error;

#[derive(Debug, Error)]
pub enum HpcError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("state error: {0}")]
    State(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("training diverged: {0}")]
    Diverged(String),
}
