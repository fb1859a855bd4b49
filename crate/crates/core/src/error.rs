use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its contract. `field` names the offending key.
    #[error("invalid {field}: {message}")]
    Config { field: String, message: String },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// The time stepper produced non-finite values or drifted out of tolerance.
    #[error("numeric abort at step {step}: {message}")]
    NumericAbort { step: usize, message: String },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("mismatched records: {0}")]
    Mismatch(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("already quantum: {0}")]
    AlreadyQuantum(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
