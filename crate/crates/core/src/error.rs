use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("corrupt tensor file: {0}")]
    Corruption(String),

    #[error("unknown wavelet `{0}` (expected haar or db2..db7)")]
    UnknownWavelet(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid spec token `{token}`: {reason}")]
    Spec { token: String, reason: String },

    #[error("basis construction failed: {0}")]
    Construction(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("perturbation failed: {0}")]
    Perturbation(String),

    #[error("image decode failed for {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn spec(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Spec {
            token: token.into(),
            reason: reason.into(),
        }
    }
}
