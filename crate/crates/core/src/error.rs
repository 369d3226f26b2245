//! Crate-wide error type with the exit-code categories used by the CLI.

use std::path::PathBuf;

/// Coarse failure class, one per CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad invocation or unusable configuration (exit 1).
    Usage,
    /// Malformed or inconsistent input data (exit 2).
    Data,
    /// Embedding backend / provider failure (exit 3).
    Provider,
    /// Filesystem and artifact-format failures (exit 4).
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 1,
            ErrorCategory::Data => 2,
            ErrorCategory::Provider => 3,
            ErrorCategory::Io => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: file not found")]
    MissingFile { path: PathBuf },

    #[error("{path}:{line}: expected {expected} tab-separated columns, found {found}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        expected: String,
        found: usize,
    },

    #[error("{path}:{line}: unknown {column} label token {token:?}")]
    UnknownLabel {
        path: PathBuf,
        line: usize,
        column: &'static str,
        token: String,
    },

    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("label consistency: {0}")]
    LabelConsistency(String),

    #[error("{path}: invalid header {found:?} (expected {expected:?})")]
    BadHeader {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("{0}")]
    Data(String),

    #[error("gold/pred id mismatch at {id:?}: {detail}")]
    IdMismatch { id: String, detail: String },

    #[error("sub-task C is not defined for German")]
    TaskCForGerman,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training set contains a single class {0:?}; at least two are required")]
    SingleClass(String),

    #[error("provider {provider_id:?}: {detail}")]
    Provider { provider_id: String, detail: String },

    #[error("{path}: {detail}")]
    Io {
        path: PathBuf,
        #[source]
        detail: std::io::Error,
    },

    #[error("{path}: bad magic (not a {expected} file)")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("{path}: unsupported format version {found}")]
    VersionMismatch { path: PathBuf, found: u16 },

    #[error("{path}: checksum mismatch, file is corrupt")]
    ChecksumMismatch { path: PathBuf },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Usage,
            Error::MissingFile { .. }
            | Error::MalformedRow { .. }
            | Error::UnknownLabel { .. }
            | Error::DuplicateId { .. }
            | Error::LabelConsistency(_)
            | Error::BadHeader { .. }
            | Error::Data(_)
            | Error::IdMismatch { .. }
            | Error::TaskCForGerman
            | Error::DimensionMismatch(_)
            | Error::EmptyTrainingSet
            | Error::SingleClass(_) => ErrorCategory::Data,
            Error::Provider { .. } => ErrorCategory::Provider,
            Error::Io { .. }
            | Error::BadMagic { .. }
            | Error::VersionMismatch { .. }
            | Error::ChecksumMismatch { .. } => ErrorCategory::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            detail: err,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
