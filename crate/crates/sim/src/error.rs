use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Malformed or invalid configuration. Exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// Numerical or I/O failure while running. Exit code 3.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl SimError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Runtime(_) => 3,
        }
    }
}

impl From<judrs_core::Error> for SimError {
    fn from(e: judrs_core::Error) -> Self {
        SimError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn config_err(path: &str, msg: impl std::fmt::Display) -> SimError {
    SimError::Config(format!("{path}: {msg}"))
}
