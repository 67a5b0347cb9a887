use std::fmt::Display;

use fundcast_core::eval::EvalError;
use fundcast_core::learn::LearnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or inputs; nothing was written. Exit code 2.
    #[error("{0}")]
    Validation(String),
    /// Failure while running a valid command. Exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

pub trait Classify<T> {
    fn invalid(self, context: impl Display) -> Result<T, CliError>;
    fn failed(self, context: impl Display) -> Result<T, CliError>;
}

impl<T, E: Display> Classify<T> for Result<T, E> {
    fn invalid(self, context: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::Validation(format!("{context}: {e}")))
    }

    fn failed(self, context: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::Runtime(format!("{context}: {e}")))
    }
}

/// Trainer errors caused by the config or the data are validation errors;
/// numerical breakdowns are runtime errors.
pub fn training_error(context: impl Display, e: EvalError) -> CliError {
    let runtime = matches!(e, EvalError::Learn(LearnError::NonFinite { .. } | LearnError::Format(_)));
    let msg = format!("{context}: {e}");
    if runtime {
        CliError::Runtime(msg)
    } else {
        CliError::Validation(msg)
    }
}
