use thiserror::Error;

use crate::hilbert::BasisSpec;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch { expected: BasisSpec, found: BasisSpec },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not Hermitian (max |M - M^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("requested {requested} levels but the space has dimension {dim}")]
    TooManyLevels { requested: usize, dim: usize },

    #[error("squeezing parameter undefined: mean spin length {length:e} is below {threshold:e}")]
    VanishingMeanSpin { length: f64, threshold: f64 },

    #[error("eigensolver did not converge: residual {residual:e} exceeds {bound:e}")]
    EigenNotConverged { residual: f64, bound: f64 },

    #[error("no avoided crossing between levels {lower} and {upper} inside the scan range")]
    NoCrossing { lower: usize, upper: usize },

    #[error("step size {step:e} fell below the minimum at t = {time}")]
    StepSizeUnderflow { time: f64, step: f64 },

    #[error("integration exceeded {max_steps} steps at t = {time}")]
    TooManySteps { time: f64, max_steps: usize },

    #[error("non-finite value encountered during integration at t = {time}")]
    NonFinite { time: f64 },

    #[error("no physical stationary state: drive is above the parametric threshold ({0})")]
    AboveThreshold(String),

    #[error("squeezing ODE left the real axis: |Im xi^2| = {imag:e} at t = {time}")]
    PhaseAssumption { time: f64, imag: f64 },

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("numerical failure in scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error("missing upstream output: {0}")]
    MissingOutput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config { .. } | Error::InvalidParameter(_) | Error::BasisMismatch { .. } => true,
            Error::Scenario { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
