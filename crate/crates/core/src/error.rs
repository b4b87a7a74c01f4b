use std::path::PathBuf;

/// Errors raised while building, running, or persisting unit tests.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid prototype at junction {junction}: {reason}")]
    Junction { junction: usize, reason: String },

    #[error("invalid prototype: {0}")]
    Prototype(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown hyperparameter `{name}` for family {family}")]
    UnknownHyper { family: String, name: String },

    #[error("unknown filter key `{key}`; valid keys: {}", valid.join(", "))]
    UnknownFilterKey { key: String, valid: Vec<String> },

    #[error("classification needs at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },

    #[error("no stable SGD reference for unit test {test_id}")]
    NoReference { test_id: String },

    #[error("database is empty")]
    EmptyDatabase,

    #[error("database format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("database truncated: {0}")]
    Truncated(String),

    #[error("corrupt database at line {line} (byte offset {offset}): {reason}")]
    Corrupt { line: usize, offset: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by reading or writing files rather than by bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
