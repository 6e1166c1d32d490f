use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A loss value fell outside `[0, 1]`.
    #[error("loss value {value} is outside [0, 1]")]
    LossOutOfRange { value: f64 },

    /// A `(round, arm)` lookup fell outside the environment's domain.
    #[error("environment lookup (t={t}, arm={arm}) outside horizon {horizon} x {arms} arms")]
    EnvironmentDomain {
        t: u64,
        arm: usize,
        horizon: u64,
        arms: usize,
    },

    /// A numeric parameter violated its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A round trace was empty or had non-contiguous round indices.
    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    /// An environment file could not be ingested.
    #[error("environment file, row {row}, column {column}: {reason}")]
    Ingestion {
        row: usize,
        column: usize,
        reason: String,
    },

    /// An operation was applied to an incompatible configuration.
    #[error("usage error: {0}")]
    Usage(String),

    /// A configuration document failed to parse or validate.
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
