use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point must have at least one coordinate")]
    EmptyPoint,

    #[error("coordinate {index} is not finite ({value})")]
    NonFiniteCoordinate { index: usize, value: f64 },

    #[error("log-density returned {0}; only finite values and -inf are allowed")]
    InvalidLogDensity(f64),

    #[error("objective returned NaN at {0:?}")]
    NanObjective(Vec<f64>),

    #[error("direction is not a unit vector (norm {0})")]
    NotUnitVector(f64),

    #[error("covariance matrix is not symmetric positive-definite")]
    NotPositiveDefinite,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "skipping chain did not enter the support within {cap} steps; \
         the expected entry time is not finite for this target and halting index"
    )]
    SafetyCapExceeded { cap: u64 },

    #[error("skipping chain produced a non-finite proposal after {steps} steps")]
    NonFiniteProposal { steps: u64 },

    #[error("doubling search exceeded 2^{cap} partial sums without leaving the obstacle")]
    ExponentCapExceeded { cap: u32 },

    #[error("directional density vanishes at a required argument")]
    ZeroDirectionalDensity,

    #[error("too few transitions: no bin pair has an expected count of at least 5, use coarser bins")]
    SparseBins,

    #[error("a known optimum is required for this operation")]
    MissingOptimum,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
