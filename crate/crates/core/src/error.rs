use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The quantizer rate is not strictly below the channel capacity.
    #[error("rate rho = {rho} bits must be strictly below the channel capacity C = {capacity} bits")]
    AboveCapacity { rho: f64, capacity: f64 },

    /// A geometric operation was asked to work on a degenerate input.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested object would be too large to build.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Caller misuse: mismatched dimensions, malformed files, bad configuration.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by size limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
