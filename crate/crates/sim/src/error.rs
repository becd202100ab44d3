use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("path still inside after max_time = {max_time} ({steps} steps)")]
    Timeout { max_time: f64, steps: u64 },
    #[error("exit on the {0} face cannot be transported")]
    Geometry(String),
    #[error("invalid simulation input: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] hetlab_core::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
