use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AdeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AdeError {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("outside stability domain: {0}")]
    Stability(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("schedule is not increasing: {0}")]
    Monotonicity(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("unsupported dtype byte {0}")]
    UnsupportedDtype(u8),

    #[error("input error: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("interval {interval}: {source}")]
    Interval {
        interval: usize,
        #[source]
        source: Box<AdeError>,
    },

    #[error("predictor failed at reverse step {step}: {source}")]
    Predictor {
        step: usize,
        #[source]
        source: Box<AdeError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AdeError {
    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        AdeError::Format {
            offset,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AdeError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            AdeError::NonFinite(_) => "non_finite",
            AdeError::Stability(_) => "stability",
            AdeError::Shape(_) => "shape",
            AdeError::DegenerateDomain(_) => "degenerate_domain",
            AdeError::Spec(_) => "spec",
            AdeError::Monotonicity(_) => "monotonicity",
            AdeError::Index(_) => "index",
            AdeError::Domain(_) => "domain",
            AdeError::Fit(_) => "fit",
            AdeError::Format { .. } => "format",
            AdeError::UnsupportedDtype(_) => "unsupported_dtype",
            AdeError::Input(_) => "input",
            AdeError::Config(_) => "config",
            AdeError::Interval { source, .. } => source.kind(),
            AdeError::Predictor { .. } => "predictor",
            AdeError::Io { .. } => "io",
        }
    }
}
