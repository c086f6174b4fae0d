use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario set: {0}")]
    InvalidScenarios(String),

    #[error("invalid affine specification: {0}")]
    InvalidAffine(String),

    #[error("observed scenario index {index} out of range (set has {len} scenarios)")]
    ObservedOutOfRange { index: usize, len: usize },

    #[error("transform needs T > t, got t = {t}, T = {maturity}")]
    EmptyHorizon { t: f64, maturity: f64 },

    #[error("non-finite rate {value} for transition {from}->{to} at time {time}")]
    NonFiniteRate {
        from: usize,
        to: usize,
        time: f64,
        value: f64,
    },

    #[error("Riccati solver failure: {0}")]
    Riccati(String),

    #[error("singular decrement system: occupancy P[{state}][{state}] = {value:e} at T = {time}")]
    Singular { state: usize, time: f64, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("repair failed: {0}")]
    Repair(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
