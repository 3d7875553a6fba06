use thiserror::Error;

/// Errors raised by the numerical and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("tolerance {requested:.3e} not reached: achieved error estimate {achieved:.3e} (value {value:.17e})")]
    ToleranceNotReached {
        requested: f64,
        achieved: f64,
        value: f64,
    },

    #[error(
        "insufficient padding: kernel mass {escaped_mass:.3e} escapes the padded window, \
         wrap-around bound {wrap_bound:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    InsufficientPadding {
        escaped_mass: f64,
        wrap_bound: f64,
        tolerance: f64,
    },

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("positivity violation: minimum {min:.6e} is below the floor {floor:.6e}")]
    Positivity { min: f64, floor: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("tail bound {bound:.3e} exceeds tolerance {tolerance:.3e}")]
    TailBound { bound: f64, tolerance: f64 },

    #[error("window truncation error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    WindowTruncation { estimate: f64, tolerance: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
