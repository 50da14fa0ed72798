use thiserror::Error;

/// Errors raised by the labeling library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("entry {index} must be strictly positive, found {value}")]
    NonPositive { index: usize, value: f64 },

    #[error("not a probability vector: {0}")]
    NotOnSimplex(String),

    #[error("tangent vector leaves the open simplex")]
    OutOfDomain,

    #[error("points have disjoint supports; the logarithm is undefined")]
    Antipodal,

    #[error("Riemannian mean did not converge within {iterations} iterations (residual {residual:e})")]
    MeanNotConverged {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
