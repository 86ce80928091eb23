use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series `{0}` has (near) zero standard deviation")]
    ConstantSeries(String),

    #[error("lag {lag} is too large for {len} observations")]
    LagTooLarge { lag: usize, len: usize },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),

    #[error("design has no columns left")]
    EmptyDesign,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("F test needs more than 3 observations, got {0}")]
    DegreesOfFreedom(usize),

    #[error("{m} variables is too many for exhaustive search (max {max}); use the genetic search")]
    TooManyVariables { m: usize, max: usize },

    #[error("interval of length {len} is too short for lag {lag}")]
    IntervalTooShort { len: usize, lag: usize },

    #[error("series of length {len} is too short for a minimum I2 size of {min_size}")]
    SeriesTooShort { len: usize, min_size: usize },

    #[error("empty range")]
    EmptyRange,

    #[error("no eligible cause for trigger `{0}`")]
    NoEligibleCause(String),

    #[error("VAR system is not stable (spectral radius {0:.4} >= 1)")]
    UnstableSystem(f64),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("non-uniform sampling in cell {0}")]
    NonUniformSampling(String),

    #[error("missing wind component `{0}`")]
    MissingComponent(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// Short machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ConstantSeries(_) => "constant-series",
            Error::LagTooLarge { .. } => "lag-too-large",
            Error::UnknownVariable(_) => "unknown-variable",
            Error::DuplicateVariable(_) => "duplicate-variable",
            Error::EmptyDesign => "empty-design",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::TooFewSamples { .. } => "too-few-samples",
            Error::Degenerate(_) => "degenerate",
            Error::SingularDesign => "singular-design",
            Error::DegreesOfFreedom(_) => "degrees-of-freedom",
            Error::TooManyVariables { .. } => "too-many-variables",
            Error::IntervalTooShort { .. } => "interval-too-short",
            Error::SeriesTooShort { .. } => "series-too-short",
            Error::EmptyRange => "empty-range",
            Error::NoEligibleCause(_) => "no-eligible-cause",
            Error::UnstableSystem(_) => "unstable-system",
            Error::InvalidPanel(_) => "invalid-panel",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Schema(_) => "schema",
            Error::NonUniformSampling(_) => "non-uniform-sampling",
            Error::MissingComponent(_) => "missing-component",
            Error::Io { .. } => "io",
        }
    }
}
