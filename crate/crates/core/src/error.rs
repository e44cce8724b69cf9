use thiserror::Error;

/// Errors raised by the simulation and processing library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("negative input for `{0}`")]
    NegativeInput(&'static str),

    #[error("cube of {n} x {m} samples exceeds the {budget} byte memory budget")]
    DimensionOverflow { n: usize, m: usize, budget: usize },

    #[error("fft length {nfft} is shorter than the {len}-sample input")]
    BadLength { len: usize, nfft: usize },

    #[error("no spectral peak in the leakage search band{}", sweep.map(|m| format!(" (sweep {m})")).unwrap_or_default())]
    NoPeak { sweep: Option<usize> },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("platform velocity is zero but an azimuth-dependent operation was requested")]
    ZeroVelocity,

    #[error("input is identically zero")]
    AllZero,

    #[error("too few bins outside exclusion intervals: {available} available, {needed} needed")]
    TooFewBins { available: usize, needed: usize },

    #[error("profile never falls 3 dB below its peak")]
    NoCrossing,

    #[error("profile has no sidelobe beyond the mainlobe nulls")]
    NoSidelobe,
}

pub type Result<T> = std::result::Result<T, Error>;
