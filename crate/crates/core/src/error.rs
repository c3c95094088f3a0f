use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite gradient at iteration {k}")]
    NonFiniteGradient { k: usize },

    /// An iterate left the divergence guard (norm above [`crate::optim::DIVERGENCE_NORM`]).
    #[error("iterate diverged at iteration {k} (norm {norm:e})")]
    Diverged { k: usize, norm: f64 },

    #[error("invalid gains: {0}")]
    InvalidGains(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state for method {method} is missing `{field}`")]
    MissingState { method: &'static str, field: &'static str },

    #[error("image format: {0}")]
    ImageFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
