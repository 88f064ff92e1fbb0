use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension too large: {what} needs {requested} entries, cap is {cap}")]
    DimensionTooLarge {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("invalid overlap {0}: must lie in (0, 1]")]
    InvalidOverlap(f64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("overlap with the referential state is zero (tr(P_chi P) = {0:e})")]
    ZeroOverlap(f64),
    #[error("superposition vanishes (norm {0:e})")]
    DegenerateSuperposition(f64),
    #[error("cutoff {cutoff} too small: captured weight {captured}")]
    CutoffTooSmall { cutoff: usize, captured: f64 },
    #[error("outcome impossible (probability {0:e})")]
    OutcomeImpossible(f64),
    #[error("input overlap {actual} does not match the declared {expected}")]
    OverlapMismatch { expected: f64, actual: f64 },
    #[error("map is not trace non-increasing (max eigenvalue {0})")]
    NotTraceNonincreasing(f64),
    #[error("qubit index clash: {0}")]
    IndexClash(String),
    #[error("gate matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("insufficient sample: constraint rank {rank}, need {needed}")]
    InsufficientSample { rank: usize, needed: usize },
    #[error("operator is not in the forced form (deviation {0:e})")]
    NotInForcedForm(f64),
    #[error("no counterexample found after {0} scan points")]
    NoCounterexampleFound(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
