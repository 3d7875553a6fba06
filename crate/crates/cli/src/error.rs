use std::fmt;

use stablelab_core::Error as CoreError;

/// Failure classes, each with its own process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or flags; nothing was computed.
    Validation(String),
    /// A numerical tolerance or guard could not be met.
    Numeric(String),
    /// Anything else: I/O, malformed inputs discovered mid-run.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Numeric(_) => 3,
            Self::Runtime(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "invalid configuration: {m}"),
            Self::Numeric(m) => write!(f, "numerical failure: {m}"),
            Self::Runtime(m) => write!(f, "runtime failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::Geometry(_) | CoreError::Shape(_) => {
                Self::Validation(e.to_string())
            }
            CoreError::ToleranceNotReached { .. }
            | CoreError::InsufficientPadding { .. }
            | CoreError::TailBound { .. }
            | CoreError::WindowTruncation { .. }
            | CoreError::Positivity { .. } => Self::Numeric(e.to_string()),
            CoreError::Domain(_) | CoreError::Format(_) | CoreError::Io(_) => Self::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
