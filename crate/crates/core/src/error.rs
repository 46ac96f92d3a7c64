use thiserror::Error;

/// Errors raised by the simulator and its analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates a validation rule.
    #[error("config error: {0}")]
    Config(String),

    /// Configuration text could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// The cohort oracle only handles static environments.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Parity(#[from] ParityError),

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error("io error: {0}")]
    Io(String),
}

/// Why a parity age could not be located.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityError {
    #[error("no parity crossing: sex ratio does not start above 100")]
    StartsBelow,
    #[error("no parity crossing: sex ratio never falls to 100")]
    NeverCrosses,
    #[error("no quality parity: mean male quality never reaches mean female quality")]
    NoQualityParity,
    #[error("profile has no defined values")]
    Empty,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
