use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("orbit not captured (2mu/r - V^2 = {margin:e}) at state {state:?}")]
    NotCaptured { margin: f64, state: [f64; 7] },

    #[error("integrator step size underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {steps} steps at t = {t:e}")]
    TooManySteps { t: f64, steps: usize },

    #[error("interval mismatch: {0}")]
    IntervalMismatch(String),

    #[error("insufficient STT order: need {needed}, have {have}")]
    InsufficientOrder { needed: usize, have: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no converged eigenpair out of {starts} starts (best residual {best_residual:e})")]
    NoConvergedEigenpair { starts: usize, best_residual: f64 },

    #[error("invalid selection matrix: {0}")]
    Selection(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
