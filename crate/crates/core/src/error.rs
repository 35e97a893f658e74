//! Error taxonomy shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Defocusing domain guard tripped: the mass logarithm needs sup|α| < 1,
    /// and we reject already at 0.9 for conditioning.
    #[error("rejected state: defocusing amplitude guard tripped (sup|alpha| = {sup:.6} >= {guard})")]
    RejectedState { sup: f64, guard: f64 },

    /// A stated precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Fourier support of an input extends beyond the arc required by the
    /// operation (Lemma-2.3-type hypotheses).
    #[error("spectral support violation: {0}")]
    SupportViolation(String),

    /// Fewer stored samples than a quadrature rule needs.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Adaptive step-size control underflowed.
    #[error("stiffness: step size underflow (dt = {dt:.3e} at t = {t:.6}); |y| = {norm:.3e}")]
    Stiffness { dt: f64, t: f64, norm: f64 },

    /// A Runge-Kutta stage produced a non-finite value.
    #[error("step failure: non-finite value in integrator stage at t = {0:.6}")]
    StepFailure(f64),

    /// Run configuration failed validation.
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
