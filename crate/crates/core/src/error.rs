use crate::manifold::RcgTrace;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("entry {index} has modulus {modulus}, expected 1")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("retraction is degenerate at entry {index} (|b + alpha*d| = {modulus:e})")]
    RetractionDegenerate { index: usize, modulus: f64 },

    #[error("search direction is not an ascent direction (slope {slope:e})")]
    NotAscent { slope: f64 },

    #[error("line search found no acceptable step above {min_step:e}")]
    StepFailure { min_step: f64 },

    #[error("non-finite {what} at iteration {iteration}")]
    NumericalFailure {
        what: &'static str,
        iteration: usize,
        trace: Box<RcgTrace>,
    },

    #[error("effective {0} channel is zero")]
    ZeroChannel(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
