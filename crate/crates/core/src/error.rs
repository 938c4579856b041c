use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by simulation, fitting and benchmark code.
///
/// Programming errors (dimension mismatches between values that were
/// constructed together, out-of-range tuning constants) panic instead;
/// only conditions a caller can plausibly hit with valid code are
/// represented here.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. `field`
    /// names the offending key as it appears in config files.
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    /// A message symbol index fell outside the constellation.
    #[error("invalid message: {0}")]
    InvalidMessage(String),

    /// A `±1` observation vector contained something else.
    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    /// A class-conditional covariance could not be inverted, which means
    /// the shrunk estimate was singular (only possible at `lambda = 0`
    /// with degenerate training data).
    #[error("class {class} covariance is singular; raise the shrinkage weight above 0")]
    SingularCovariance { class: usize },

    /// A dataset dump could not be parsed.
    #[error("malformed dataset dump: {0}")]
    MalformedDump(String),

    /// An I/O failure while reading or writing `path`.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field: field.into(), reason: reason.into() }
    }
}
