use std::path::PathBuf;

use thiserror::Error;

/// Parameter validation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("stiffness range is degenerate: k_min = {k_min} must be below k_max = {k_max}")]
    DegenerateRange { k_min: f64, k_max: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} = {value} is outside {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

/// Integrator failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no terminal event before the horizon t_max = {t_max} s")]
    HorizonExceeded { t_max: f64 },
    #[error("step size {step:e} s underflowed at t = {t} s")]
    StepUnderflow { t: f64, step: f64 },
    #[error("non-finite state at t = {t} s")]
    NonFinite { t: f64 },
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(&'static str),
}

/// Failures of a single stance rollout.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RolloutError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

/// Sweep and regression failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("deviation series never crosses 0.5")]
    NoCrossing,
    #[error("regression needs at least 3 valid points, got {0}")]
    UnderdeterminedFit(usize),
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// Configuration and experiment-runner failures.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown key in config: {0}")]
    UnknownKey(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config validation failed: {0}")]
    Validation(String),
}

impl From<ParamError> for ConfigError {
    fn from(err: ParamError) -> Self {
        ConfigError::Validation(err.to_string())
    }
}

impl From<SweepError> for ConfigError {
    fn from(err: SweepError) -> Self {
        ConfigError::Validation(err.to_string())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("computation failed: {0}")]
    Computation(String),
}
