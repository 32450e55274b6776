use std::path::PathBuf;

/// Crate-wide error type. Every fallible public operation returns this.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed XES at {location}: {message}")]
    Xes { location: String, message: String },

    #[error("csv schema error: missing column '{0}'")]
    CsvSchema(String),

    #[error("csv row {row}: {message}")]
    CsvRow { row: u64, message: String },

    #[error("unparseable timestamp '{value}' (row {row})")]
    Timestamp { row: u64, value: String },

    #[error("reserved label '{0}' present in raw input")]
    ReservedLabel(String),

    #[error("event log is already canonical")]
    AlreadyCanonical,

    #[error("event log is not canonical")]
    NotCanonical,

    #[error("unknown case id '{0}'")]
    UnknownCase(String),

    #[error("unknown state")]
    UnknownState,

    #[error("state has no outgoing transitions and is not an end state")]
    UndefinedSuccessor,

    #[error("incremental update violation for case '{case}': {message}")]
    Incrementality { case: String, message: String },

    #[error("split produced an empty initial release (fraction {0})")]
    EmptySplit(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("leakage ledger is empty")]
    EmptyLedger,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
