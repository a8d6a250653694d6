use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A model was evaluated outside of its domain (e.g. `log(0)`).
    #[error("{model}: value {value} at cell {index} is outside the model domain")]
    Domain {
        model: &'static str,
        index: usize,
        value: f64,
    },

    #[error("energy value is not available for model `{0}` (gradient-only model)")]
    EnergyUnavailable(&'static str),

    #[error("semi-implicit mobility is not defined for `{0}`")]
    SemiImplicitUnsupported(&'static str),

    #[error("Newton solve did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("infeasible projection: mass {mass} outside [{lower}, {upper}]")]
    Infeasible { mass: f64, lower: f64, upper: f64 },

    #[error("degenerate box [{0}, {1}]: lower bound must be strictly below upper bound")]
    DegenerateBox(f64, f64),

    #[error("active-set iteration did not settle after {iterations} iterations ({lower} lower / {upper} upper active cells, {oscillating} cells switching, repeated sets: {cycling})")]
    ActiveSetCycle {
        iterations: usize,
        lower: usize,
        upper: usize,
        oscillating: usize,
        cycling: bool,
    },

    #[error("JKO step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed snapshot {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
