use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chirp spec: {0}")]
    InvalidSpec(String),

    #[error("signal is empty")]
    EmptySignal,

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("transform length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("transform length {n_fft} is shorter than input length {len}")]
    FftTooShort { n_fft: usize, len: usize },

    #[error("window of {window} samples is longer than signal of {signal} samples")]
    WindowTooLong { window: usize, signal: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("degenerate axis: {0}")]
    DegenerateAxis(String),

    #[error("invalid plane: {0}")]
    InvalidPlane(String),

    #[error("invalid Hough grid: {0}")]
    InvalidGrid(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("line angle {0} rad is too close to vertical to express as a chirp")]
    DegenerateAngle(f64),

    #[error("line lies outside the rho range (rho = {0})")]
    RhoOutOfRange(f64),

    #[error("mapping set is empty")]
    EmptySet,

    #[error("plane has no positive mass to normalize")]
    AllZeroPlane,

    #[error("weight trace needs at least {min} iterations, got {len}")]
    TraceTooShort { len: usize, min: usize },

    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),

    #[error("calibration underpowered: {runs} runs at pf = {pf} gives fewer than 5 expected exceedances")]
    CalibrationUnderpowered { runs: usize, pf: f64 },

    #[error("invalid threshold policy: {0}")]
    InvalidPolicy(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("truth parameter must be nonzero: {0}")]
    ZeroTruth(&'static str),

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
