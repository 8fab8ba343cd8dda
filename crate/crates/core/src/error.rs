use thiserror::Error;

/// Errors produced by state construction, circuit assembly and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// Two states could not be combined because their mode registries clash.
    #[error("registry conflict: {0}")]
    RegistryConflict(String),

    /// A transform matrix failed the unitarity check.
    #[error("non-unitary transform: max deviation {max_dev:.3e} exceeds {tol:.1e}")]
    NonUnitary { max_dev: f64, tol: f64 },

    /// A mode index or label was not found in the registry.
    #[error("unknown mode: {0}")]
    UnknownMode(String),

    /// A numeric parameter fell outside its allowed range.
    #[error("invalid parameter {name}: {value} not in {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// Occupation incompatible with the dual-rail qubit encoding.
    #[error("encoding error: {0}")]
    Encoding(String),

    /// Phase calibration could not locate a fringe.
    #[error("calibration failure: {0}")]
    CalibrationFailure(String),

    /// A least-squares fit was singular or under-determined.
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Measurement records were empty or incomplete.
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
}

pub type Result<T> = std::result::Result<T, Error>;
