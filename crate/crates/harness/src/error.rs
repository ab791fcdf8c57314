use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] vmd_core::CoreError),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Caller-supplied data violates a precondition.
    #[error("input: {0}")]
    Input(String),

    /// A corpus manifest could not be parsed.
    #[error("manifest: {0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
