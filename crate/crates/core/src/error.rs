use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{column}`{}", source_hint(.path))]
    MissingColumn {
        column: String,
        path: Option<PathBuf>,
    },

    #[error("parse error at line {line}{}: {message}", source_hint(.path))]
    Row {
        line: u64,
        message: String,
        path: Option<PathBuf>,
    },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("fetch error{}: {message}", .status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Fetch {
        status: Option<u16>,
        retryable: bool,
        message: String,
    },

    #[error("empty panel: {0}")]
    EmptyPanel(String),

    #[error("lex error at offset {offset}: unexpected character {found:?}")]
    Lex { offset: usize, found: char },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("catalog error at line {line}: {message}")]
    Catalog { line: usize, message: String },

    #[error("alpha `{name}`: {source}")]
    Alpha {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("dimension mismatch: expected {expected} features, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("unsupported: {0}")]
    Capability(String),

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn source_hint(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| format!(" in {}", p.display()))
        .unwrap_or_default()
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    /// True for failures worth retrying (network trouble, 5xx, 429).
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Fetch { retryable: true, .. })
    }
}
