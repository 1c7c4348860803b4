use thiserror::Error;

use crate::numerics::LinalgError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid spin j = {0}: 2j must be a positive integer")]
    InvalidSpin(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(&'static str),
    #[error("invalid top parameters: {0}")]
    InvalidParams(&'static str),
    #[error("operation requires a unitary Floquet operator (Im k = {k_im})")]
    NotUnitary { k_im: f64 },
    #[error("renormalization is required when Im k > 0")]
    RenormalizationRequired,
    #[error("trace collapsed to {trace:e} at step {step}")]
    TraceCollapse { step: usize, trace: f64 },
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series needs at least two samples")]
    SeriesTooShort,
    #[error("value {0} out of range")]
    OutOfRange(f64),
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("power-law fit requires positive data")]
    NonPositiveData,
    #[error("time window is empty")]
    EmptyWindow,
}
