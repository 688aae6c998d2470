//! Exit codes and the error type they ride on.
//!
//! The codes are part of the interface; scripts branch on them. 0 means
//! every requested check passed, 2 is a config or usage problem (including
//! unreadable artifact files), 3 is a solver failure or a failed check, and
//! 4 means the request fell outside what the resolution or the certified
//! evaluation regime can answer. 1 is kept for environmental trouble such
//! as an unwritable output directory.

use fracdiff_core::Error as CoreError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CHECK: i32 = 3;
pub const EXIT_RESOLUTION: i32 = 4;

#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

pub type CmdResult<T> = Result<T, CmdError>;

impl CmdError {
    pub fn config(message: impl Into<String>) -> Self {
        CmdError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn resolution(message: impl Into<String>) -> Self {
        CmdError {
            code: EXIT_RESOLUTION,
            message: message.into(),
        }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::InvalidParameter { .. }
            | CoreError::LengthMismatch { .. }
            | CoreError::Format(_) => EXIT_CONFIG,
            CoreError::OutOfRegime { .. }
            | CoreError::PrecisionExhausted { .. }
            | CoreError::InsufficientScales { .. } => EXIT_RESOLUTION,
            CoreError::SolveFailure { .. } => EXIT_CHECK,
            CoreError::Io(_) => EXIT_INTERNAL,
        };
        CmdError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError {
            code: EXIT_INTERNAL,
            message: format!("{e:#}"),
        }
    }
}
