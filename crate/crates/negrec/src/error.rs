use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes: 0 success, 1 runtime failure, 2 usage error,
/// 3 verification failure.
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt document {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },

    #[error("version mismatch in {path}: found {found}, expected {expected}")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("checksum mismatch in {path}: the file does not match its embedded digest")]
    Checksum { path: PathBuf },

    #[error("dimension mismatch: {detail}")]
    Dimension { detail: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] negrec_core::CoreError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }

    /// Machine-parsable error tag for the one-line diagnostic output.
    pub fn tag(&self) -> &'static str {
        match self {
            AppError::Io { .. } => "io",
            AppError::Corrupt { .. } => "corrupt",
            AppError::Version { .. } => "version",
            AppError::Checksum { .. } => "checksum",
            AppError::Dimension { .. } => "dimension",
            AppError::Usage(_) => "usage",
            AppError::Core(_) => "core",
        }
    }
}
