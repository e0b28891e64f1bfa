use thiserror::Error;

/// Errors raised by the spectral, propagation and audit routines.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} is not representable (natural log of the value is {log_value})")]
    Range { what: &'static str, log_value: f64 },

    #[error("time {t} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("coefficient path is empty")]
    EmptyPath,

    #[error("coefficient path ends at {end}, beyond the horizon {horizon}")]
    PathBeyondHorizon { end: f64, horizon: f64 },

    #[error(
        "stability guard violated: step {step} at t = {at} exceeds the admissible {required} \
         (c_max * sqrt(lambda) * dt must not exceed 0.5)"
    )]
    StabilityGuard { step: f64, required: f64, at: f64 },

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
