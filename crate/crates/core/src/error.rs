use std::path::PathBuf;

/// Errors produced by the analytic, sampling, spectral and experiment layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("spectral parameter must lie in the upper half plane (eta = {eta})")]
    NonPositiveEta { eta: f64 },

    #[error("energy must be positive (E = {energy})")]
    NonPositiveEnergy { energy: f64 },

    #[error("window width must be positive (eta = {eta})")]
    EmptyWindow { eta: f64 },

    #[error("argument `{name}` must be finite (got {value})")]
    NonFinite { name: &'static str, value: f64 },

    #[error("fixed-point residual is undefined at delta = 0")]
    ZeroDelta,

    #[error("self-consistency residual is undefined: Delta_N is within {tol:e} of -1")]
    DegenerateDenominator { tol: f64 },

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix size must be at least {min} (got {n})")]
    SizeTooSmall { n: usize, min: usize },

    #[error("singular value decomposition failed to converge ({context})")]
    Decomposition { context: String },

    #[error("quadrature did not reach tolerance: estimate {value}, error {error:e}")]
    QuadratureTolerance { value: f64, error: f64 },

    #[error("quadratic form is degenerate: Tr A*A = 0")]
    DegenerateForm,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("malformed matrix dump: {0}")]
    MalformedDump(String),

    #[error("configuration error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
