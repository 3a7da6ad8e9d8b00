use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the harness, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] oulab_core::error::Error),

    #[error("estimate did not converge within {n_max} samples (epsilon = {epsilon})")]
    NotConverged { n_max: usize, epsilon: f64 },

    #[error("{failed} of {total} verification checks fell outside 3 standard errors")]
    VerificationFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad configuration or input, 3 for numeric instability, 4 when the
    /// Cauchy surrogate does not converge, 1 for failed verification checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Core(e) if e.is_numeric_instability() => 3,
            CliError::Core(_) => 2,
            CliError::NotConverged { .. } => 4,
            CliError::VerificationFailed { .. } => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
