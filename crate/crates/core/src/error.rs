use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by FTEN tensor I/O. Each corruption mode is reported distinctly.
#[derive(Debug, Error)]
pub enum FtenError {
    #[error("bad magic: expected \"FTEN\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u16),
    #[error("unsupported dtype code {0}")]
    BadDtype(u8),
    #[error("truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("length mismatch: dims {dims:?} imply {expected} elements, header declares {declared}")]
    LengthMismatch {
        dims: Vec<u32>,
        expected: u64,
        declared: u64,
    },
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FtenError,
    },
    #[error("{path}: malformed manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("soft value iteration did not converge within {sweeps} sweeps (last change {delta:e})")]
    NoConvergence { sweeps: usize, delta: f64 },
    #[error("state space too large for enumeration: {0} trajectories")]
    StateSpaceTooLarge(u128),
    #[error("stale cache: {0}")]
    StaleCache(String),
    #[error("constant map has zero variance")]
    ConstantMap,
    #[error("demonstration has zero probability under the policy at step {step}")]
    ImpossibleDemo { step: usize },
    #[error("training diverged: {0}")]
    Diverged(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used for CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) | Error::Validation(_) => "validation",
            Error::ShapeMismatch(_) => "shape",
            Error::NonFinite(_) | Error::Diverged(_) => "numeric",
            Error::OutOfBounds(_) => "bounds",
            Error::Empty(_) => "empty",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Manifest { .. } => "manifest",
            Error::NoConvergence { .. } => "convergence",
            Error::StateSpaceTooLarge(_) => "capacity",
            Error::StaleCache(_) => "cache",
            Error::ConstantMap => "constant-map",
            Error::ImpossibleDemo { .. } => "demo",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
