use thiserror::Error;

/// Errors raised by the detection core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),

    #[error("unsupported audio format: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("probability backend '{backend}' failed: {message}")]
    Backend { backend: String, message: String },

    #[error("input error: {0}")]
    Input(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
