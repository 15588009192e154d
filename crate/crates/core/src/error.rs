use thiserror::Error;

use crate::gates::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Request exceeds what the dense oracle can hold in memory.
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("circuit is not legal on this hardware: {}", format_violations(.0))]
    Illegal(Vec<Violation>),

    #[error("missing phase calibration for XX instance {0}")]
    MissingCalibration(usize),

    #[error("confusion matrix is ill-conditioned (condition number {condition:.3e}, limit {limit:.1e})")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("fit did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
