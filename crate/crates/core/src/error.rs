use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate shell (two_j = 0): normalized expectations are undefined")]
    DegenerateShell,

    #[error("Fock truncation too small: need n_max >= {required}, got {n_max}")]
    TruncationTooSmall { required: usize, n_max: usize },

    #[error("step size collapsed to {h:e} at z = {z}; last good state {state:?}")]
    StepSizeCollapse { z: f64, h: f64, state: Vec<f64> },

    #[error("integrator exceeded {max_steps} steps at z = {z}")]
    MaxSteps { z: f64, max_steps: usize },

    #[error("Ermakov radius fell below its lower bound: b = {b} < b_min = {b_min} at z = {z}")]
    EnvelopeCollapse { z: f64, b: f64, b_min: f64 },

    #[error("monodromy extraction failed: det = {det} (expected 1)")]
    Monodromy { det: f64 },

    #[error("tolerance not met: requested {requested:e}, achieved {achieved:e}")]
    Tolerance { requested: f64, achieved: f64 },

    #[error("scenario error: {0}")]
    Scenario(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DegenerateShell
                | Error::TruncationTooSmall { .. }
                | Error::Scenario(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
