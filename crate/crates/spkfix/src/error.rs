use std::path::PathBuf;

/// Errors surfaced by the IO layer. `exit_code` sorts them into the CLI's
/// validation (1) and runtime (2) classes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] spkfix_core::Error),
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn format(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Format { file: file.into(), line, message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(spkfix_core::Error::Gateway(_)) => 2,
            Error::Core(_) | Error::Format { .. } | Error::Validation(_) | Error::Config(_) => 1,
            Error::Io { .. } | Error::Runtime(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
