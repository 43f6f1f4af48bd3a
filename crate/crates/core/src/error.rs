use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes via
/// [`Error::is_input_error`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    MalformedRow { line: u64, msg: String },

    #[error("line {line}: non-monotonic time (t = {t} after {prev})")]
    NonMonotonicTime { line: u64, t: f64, prev: f64 },

    #[error("line {line}: negative speed {value}")]
    NegativeSpeed { line: u64, value: f64 },

    #[error("resampling needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown model '{0}' (expected one of ghr, gipps, idm, fvd, w99)")]
    UnknownModel(String),

    #[error("parameter '{name}' = {value} outside bounds [{lower}, {upper}]")]
    OutOfBounds {
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("model evaluation failed: {0}")]
    Model(#[from] crate::models::ModelError),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("observation has zero energy (all samples are 0)")]
    ZeroObservation,

    #[error("zero variance in correlation input")]
    ZeroVariance,

    #[error("objective failed at genome {genome:?}: {source}")]
    Objective {
        genome: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True when the failure stems from bad input or configuration rather than
    /// from a computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Model(_) | Error::Objective { .. } | Error::ZeroObservation | Error::ZeroVariance
        )
    }
}
