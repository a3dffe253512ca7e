use thiserror::Error;

/// Errors shared by every module of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid prime {0}: p must be an odd prime with p <= 61")]
    InvalidPrime(u32),

    #[error("binomial index {index} must be smaller than the prime {p} (factorial not invertible)")]
    BinomialIndexTooLarge { index: u32, p: u32 },

    #[error("interpolation nodes must be pairwise distinct")]
    RepeatedNodes,

    #[error("interpolation degree {degree} must be smaller than the prime {p}")]
    DegreeTooLarge { degree: u32, p: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),

    #[error("enumeration of {size} points exceeds the guard of {guard}")]
    GuardExceeded { size: u128, guard: u128 },

    #[error("observable tuple is empty")]
    EmptyObservables,

    #[error("tower needs at least {needed} levels, has {has}")]
    NotEnoughLevels { needed: usize, has: usize },

    #[error("difference Delta_g^{order} u_{order} is not constant: the tower is malformed")]
    NonConstantDifference { order: u32 },

    #[error("Gowers norm order must be at least 1")]
    GowersOrderZero,

    #[error("window dimension {d} exceeds the acting dimension {n}")]
    WindowTooLarge { d: u32, n: u32 },

    #[error("Heisenberg example needs acting dimension N >= 2, got {0}")]
    HeisenbergTooSmall(u32),

    #[error("the weight eta must have mean 1, got {0}")]
    BadEtaMean(String),

    #[error("coefficient c_2 = {0} is degenerate: c_2-1, c_2, c_2+1 must all be invertible")]
    DegenerateC2(u32),

    #[error("event set is empty")]
    EmptyEventSet,

    #[error("torus depth {have} is too shallow: the operation needs {need} fractional digits")]
    DepthExhausted { need: usize, have: usize },

    #[error("universal system level {0} must satisfy 1 <= j < p")]
    BadUniversalLevel(u32),

    #[error("coefficient tuple entries must be pairwise distinct")]
    RepeatedCoefficients,

    #[error("constraint theta has the wrong shape at level {level}")]
    BadThetaShape { level: usize },

    #[error("system description is malformed: {0}")]
    BadSystemDescription(String),
}

pub type Result<T> = std::result::Result<T, Error>;
