use std::path::PathBuf;

use dirl::DirlError;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] DirlError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_size_guard() => 3,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) | CliError::Io { .. } => 1,
            CliError::Usage(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) if e.is_size_guard() => "size_guard",
            CliError::Core(e) if e.is_validation() => "validation",
            CliError::Core(_) | CliError::Io { .. } => "io",
            CliError::Usage(_) => "validation",
        }
    }

    /// One JSON object per line on stderr.
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() }).to_string()
    }
}

pub fn warn(code: &str, message: impl AsRef<str>) {
    eprintln!("{}", json!({ "warning": code, "message": message.as_ref() }));
}

pub type CliResult<T> = std::result::Result<T, CliError>;
