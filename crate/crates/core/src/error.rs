//! Error type shared by every module.

use thiserror::Error;

/// Errors reported by the library.
///
/// Variants are grouped by how a caller is expected to react: `InvalidInput`
/// and `Config` mean the request itself is malformed, `Geometry` means the
/// requested physical layout violates a precondition of the chosen method, and
/// `Numerical` means a computation could not reach its contract.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A dimension tag that the unit system does not know.
    #[error("unknown dimension tag `{0}`")]
    UnknownDimension(String),
    /// A configuration file or value could not be parsed or resolved.
    #[error("config error: {0}")]
    Config(String),
    /// The requested geometry violates a method precondition.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// A numerical routine failed to meet its contract.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// An output file could not be written.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable kind used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::UnknownDimension(_) => "unknown_dimension",
            Error::Config(_) => "config",
            Error::Geometry(_) => "geometry",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}
