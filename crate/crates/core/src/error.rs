use thiserror::Error;

/// Crate-wide error type. Numeric routines return `InvalidParameter` for
/// arguments outside their documented domain rather than panicking, so the
/// CLI can map them to a clean exit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range. `constraint` is a short
    /// human-readable statement of the violated condition.
    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Two containers that must agree in length do not.
    #[error("length mismatch in {context}: {expected} vs {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// The argument lies outside the region where the series evaluation is
    /// certified to converge.
    #[error("argument {value} outside the supported regime: {detail}")]
    OutOfRegime { value: f64, detail: &'static str },

    /// The requested tolerance cannot be met in double precision for this
    /// argument; the attainable bound is reported.
    #[error("cannot certify result to requested accuracy: bound {bound:e} at {value}")]
    PrecisionExhausted { value: f64, bound: f64 },

    /// The linear solve or a per-step contract failed during marching.
    #[error("solver failure at step {step}: {detail}")]
    SolveFailure { step: usize, detail: String },

    /// A scan or fit needs more resolved scales than the grid provides.
    #[error("insufficient scales: {detail}")]
    InsufficientScales { detail: String },

    /// A trajectory file is malformed or from an unsupported version.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            constraint,
        }
    }
}
