use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid experiment configuration: {0}")]
    Validation(String),
    #[error("every one of the {n} paths at eps = {eps} timed out")]
    AllTimeout { eps: f64, n: u64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("only {found} escapes, need at least {needed}")]
    InsufficientEscapes { found: u64, needed: u64 },
    #[error(transparent)]
    Sim(#[from] hetlab_sim::SimError),
    #[error(transparent)]
    Core(#[from] hetlab_core::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
