use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("factorization failed with jitter {jitter:e} (n = {size}, min diagonal {min_diagonal:e}, max diagonal {max_diagonal:e})")]
    Factorization {
        size: usize,
        jitter: f64,
        min_diagonal: f64,
        max_diagonal: f64,
    },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
