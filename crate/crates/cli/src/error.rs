use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: u64, column: String, message: String },
    #[error("invalid class label {value:?} at line {line}")]
    Coding { line: u64, value: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] varmix::Error),
}

impl CliError {
    /// 1 for failures inside the model code, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Model(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Vocabulary errors from the library are usage errors at the command line.
pub fn usage(e: varmix::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub type Result<T> = std::result::Result<T, CliError>;
