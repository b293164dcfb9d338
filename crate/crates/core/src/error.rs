use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the measurement engine.
///
/// Every variant maps onto a stable machine code (see [`Error::code`]) that
/// the CLI and the REST service expose unchanged.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("duplicate point: {0}")]
    DuplicatePoint(String),

    #[error("outside projection domain: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("transform is not invertible: {0}")]
    NonInvertible(String),

    #[error("{0}")]
    NotFound(String),

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("session is not calibrated")]
    Uncalibrated,

    #[error("incomplete feature: {0}")]
    IncompleteFeature(String),

    #[error("schema violation at {path}{}: {message}", location(*.line, *.column))]
    Schema {
        path: String,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },

    #[error("unsupported schema version {0:?}")]
    Version(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" (line {l}, column {c})"),
        (Some(l), None) => format!(" (line {l})"),
        _ => String::new(),
    }
}

/// Broad failure class, used to pick CLI exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad or malformed input: files, schema, IO.
    Input,
    /// The request was well-formed but the geometry or state cannot satisfy it.
    Domain,
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DuplicatePoint(_) => "duplicate-point",
            Error::Domain(_) => "domain-error",
            Error::InsufficientData(_) => "insufficient-data",
            Error::DegenerateConfiguration(_) => "degenerate-configuration",
            Error::NonInvertible(_) => "non-invertible",
            Error::NotFound(_) => "not-found",
            Error::DuplicateId(_) => "duplicate-id",
            Error::Uncalibrated => "uncalibrated-session",
            Error::IncompleteFeature(_) => "incomplete-feature",
            Error::Schema { .. } => "schema-violation",
            Error::Version(_) => "unsupported-version",
            Error::Io { .. } => "io-error",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Schema { .. } | Error::Version(_) | Error::Io { .. } => ErrorClass::Input,
            _ => ErrorClass::Domain,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
