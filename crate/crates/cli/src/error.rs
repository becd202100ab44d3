use std::fmt;
use std::path::Path;

use hetlab_core::Error as CoreError;
use hetlab_lab::LabError;
use hetlab_sim::SimError;

/// Bad input: unreadable or malformed files, invalid flags or parameters.
pub const EXIT_VALIDATION: i32 = 1;
/// The run itself failed: timeouts, quadrature, too little data.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    pub fn write(path: &Path, e: std::io::Error) -> Self {
        CliError::runtime(format!("cannot write {}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Quadrature(_) => CliError::runtime(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Validation(_) => CliError::validation(e.to_string()),
            SimError::Core(c) => c.into(),
            SimError::Timeout { .. } | SimError::Geometry(_) => CliError::runtime(e.to_string()),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Validation(_) => CliError::validation(e.to_string()),
            LabError::Sim(s) => s.into(),
            LabError::Core(c) => c.into(),
            LabError::AllTimeout { .. } | LabError::InsufficientData(_) | LabError::InsufficientEscapes { .. } => {
                CliError::runtime(e.to_string())
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
