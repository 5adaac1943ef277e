use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("negative eigenvalue {value:e} below support cutoff")]
    NegativeEigenvalue { value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("size {size} exceeds cap {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("invalid order alpha = {0}")]
    InvalidAlpha(f64),

    #[error("support condition violated: {0}")]
    SupportViolation(&'static str),

    #[error("method unsupported: {0}")]
    MethodUnsupported(&'static str),

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("rate {rate} outside open window ({low}, {high})")]
    RateOutOfWindow { rate: f64, low: f64, high: f64 },

    #[error("ZeroVariance: conditional information variance vanishes")]
    ZeroVariance,

    #[error("invalid epsilon {0}: must lie in [0, 1)")]
    InvalidEpsilon(f64),

    #[error("invalid mu {mu}: must lie in (0, {trace}]")]
    InvalidMu { mu: f64, trace: f64 },

    #[error("index set size {w_size} must be smaller than alphabet size {alphabet}")]
    WTooLarge { w_size: usize, alphabet: usize },

    #[error("invalid POVM: {0}")]
    PovmInvalid(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("variational scan and refinement disagree: scan {scan}, refined {refined}")]
    ScanMismatch { scan: f64, refined: f64 },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
