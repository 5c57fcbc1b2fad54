use std::path::PathBuf;

use thiserror::Error;

/// Failures raised by the command layer itself.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: malformed IDX at byte {offset}: {reason}")]
    Idx {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("{path}: line {line}: {reason}")]
    Csv {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

pub fn validation(msg: impl Into<String>) -> anyhow::Error {
    CliError::Validation(msg.into()).into()
}

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Maps an error chain to the process exit code: 2 validation, 3 numerical, 4 I/O.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<csl_core::Error>() {
            return match e {
                e if e.is_numerical() => EXIT_NUMERICAL,
                csl_core::Error::Io(_) | csl_core::Error::Json(_) | csl_core::Error::Format { .. } => EXIT_IO,
                _ => EXIT_VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Validation(_) => EXIT_VALIDATION,
                CliError::Idx { .. } | CliError::Csv { .. } => EXIT_IO,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}
