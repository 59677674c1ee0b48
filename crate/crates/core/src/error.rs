use thiserror::Error;

/// Errors raised by geometry construction, spectral computation and the audits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("warp is not positive: rho({s}) = {value}")]
    NonPositiveWarp { s: f64, value: f64 },
    #[error("unknown preset {0:?}; valid presets: disk, ball3, cylinder, exTorus, concave, asym-exp")]
    UnknownPreset(String),
    #[error("bad dimension: {0}")]
    BadDimension(String),
    #[error("depth t = {t} outside [0, {max}]")]
    DepthOutOfRange { t: f64, max: f64 },
    #[error("coordinate {s} outside [{lo}, {hi}]")]
    OutOfDomain { s: f64, lo: f64, hi: f64 },
    #[error("radial profile overflow at mu = {mu}; lower lambda_max")]
    Overflow { mu: f64 },
    #[error("bad shooting start: {0}")]
    BadStart(String),
    #[error("root bracketing failed for mu = {mu}: {reason}")]
    BracketFailure { mu: f64, reason: String },
    #[error("quadrature under-resolved: {what} changed by {change:e} under refinement")]
    QuadratureUnderresolved { what: String, change: f64 },
    #[error("field is identically zero")]
    ZeroField,
    #[error("grid too coarse: residual did not decrease under step halving ({coarse:e} -> {fine:e})")]
    GridTooCoarse { coarse: f64, fine: f64 },
    #[error("mode with lambda = {lambda} lies below the frequency floor {floor}")]
    BadFrequencyFloor { lambda: f64, floor: f64 },
    #[error("Neumann data incompatible: constant coefficient {c0:e}")]
    NeumannIncompatible { c0: f64 },
    #[error("reference truncation unresolved: error changed by {change:e} under doubling")]
    TruncationUnresolved { change: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config: {0}")]
    ConfigParse(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
