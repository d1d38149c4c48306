use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] aqo_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed {what} in {path}: {message}")]
    Format { what: &'static str, path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 I/O, 2 validation, 3 capacity, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use aqo_core::Error as E;
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) | CliError::Format { .. } => 2,
            CliError::Core(e) => match e {
                E::Capacity { .. } => 3,
                E::Numerical(_) | E::NoConvergence { .. } => 4,
                _ => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "io",
            3 => "capacity",
            4 => "numerical",
            _ => "validation",
        }
    }

    /// Capacity errors carry a hint on how to get under the limit.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(aqo_core::Error::Capacity { what, .. }) if what.contains("spectrum") => {
                Some("dense diagonalization is limited to n <= 12; reduce --n or use evolve / sweep-t")
            }
            CliError::Core(aqo_core::Error::Capacity { .. }) => Some("reduce --n (or the requested level count)"),
            CliError::Core(aqo_core::Error::StabilityGuard { .. }) => Some("reduce --dt or omit it to use the guarded default"),
            _ => None,
        }
    }

    /// Machine-readable form written to stderr on failure.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
                "hint": self.hint(),
            }
        })
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
