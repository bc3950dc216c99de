use thiserror::Error;

/// Failures raised by the solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("quadrature did not converge: estimate {value}, error estimate {error_estimate:e} (tolerance {tolerance:e})")]
    Quadrature {
        value: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("residual {residual:e} above tolerance {tolerance:e} in {context}")]
    Residual {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("degenerate quantity in {context}: |value| = {value:e}")]
    Degenerate { context: &'static str, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time step {dt:e} violates the stability cap {cap:e} ({kind})")]
    Cfl { dt: f64, cap: f64, kind: &'static str },

    #[error("density fell below the floor {floor:e} (min {min:e}) at t = {t}")]
    DensityFloor { min: f64, floor: f64, t: f64 },

    #[error("monitor `{monitor}` = {value:e} exceeded threshold {threshold:e} at t = {t}")]
    BlowUp {
        monitor: &'static str,
        value: f64,
        threshold: f64,
        t: f64,
    },

    #[error("step failed at t = {t}: {source}")]
    Step {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                t,
                source: Box::new(e),
            },
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64], context: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: context.to_string(),
        })
    }
}
