use thiserror::Error;

/// Errors raised by the solvers, transforms and verification checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GchError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid initial data: {0}")]
    InvalidData(String),
    #[error("grid too small: {0}")]
    GridTooSmall(String),
    #[error("corrupt data: {0}")]
    CorruptData(String),
    #[error("state corrupt: {0}")]
    StateCorrupt(String),
    #[error("query point {x} outside field span [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("numerical blowup at t = {t}: {what}")]
    NumericalBlowup { t: f64, what: String },
    #[error("energy bound violated at t = {t}: E = {energy} > {bound}")]
    EnergyBoundViolated { t: f64, energy: f64, bound: f64 },
    #[error("breaking imminent at t = {t}: max |u_x| = {slope} exceeds {threshold}")]
    BreakingImminent { t: f64, slope: f64, threshold: f64 },
    #[error("test function support exceeds the computed window: {0}")]
    WindowTooSmall(String),
}

impl GchError {
    /// Stable variant name, used on the diagnostic stream of the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            GchError::UnknownPreset(_) => "UnknownPreset",
            GchError::InvalidParameter(_) => "InvalidParameter",
            GchError::InvalidData(_) => "InvalidData",
            GchError::GridTooSmall(_) => "GridTooSmall",
            GchError::CorruptData(_) => "CorruptData",
            GchError::StateCorrupt(_) => "StateCorrupt",
            GchError::OutOfDomain { .. } => "OutOfDomain",
            GchError::NumericalBlowup { .. } => "NumericalBlowup",
            GchError::EnergyBoundViolated { .. } => "EnergyBoundViolated",
            GchError::BreakingImminent { .. } => "BreakingImminent",
            GchError::WindowTooSmall(_) => "WindowTooSmall",
        }
    }
}

pub type Result<T> = std::result::Result<T, GchError>;
