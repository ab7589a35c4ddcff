use crate::dsl::{EvalError, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric is not positive definite at {point:?} (leading minor {minor})")]
    NotPositiveDefinite { point: Vec<f64>, minor: usize },
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("tangent vector is zero")]
    ZeroTangent,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("relative energy drift {drift:e} exceeds tolerance {tol:e}")]
    EnergyDrift { drift: f64, tol: f64 },
    #[error("eigenvalue functions are not strictly ordered at {point:?}")]
    OrderingViolated { point: Vec<f64> },
    #[error("pfaffian needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("trajectory has zero length")]
    ZeroLength,
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
