use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),
    #[error("numerical failure in simplex: {0}")]
    NumericalFailure(String),
    #[error("invalid sample count N={0}: need N >= 4")]
    BadN(usize),
    #[error("harmonic {k} is aliased on a grid of {n} samples (need k < N/2)")]
    AliasedHarmonic { k: usize, n: usize },
    #[error("invalid rectifier spec: {0}")]
    SpecInvalid(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("load current must be positive, got {0}")]
    NonpositiveLoad(f64),
    #[error("relaxed value {value} at index {index} is outside the level range")]
    OutOfRange { index: usize, value: f64 },
    #[error("row {0} of the relaxed scheme carries no mass")]
    DegenerateRow(usize),
    #[error("signal is empty")]
    EmptySignal,
    #[error("signal has zero energy")]
    ZeroSignal,
    #[error("desired bins carry zero energy")]
    ZeroDesired,
    #[error("filter parameters must be positive: {0}")]
    NonpositiveParams(String),
    #[error("enumeration too large: N={n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("bad voltage template: {0}")]
    BadTemplate(String),
}
