use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spectrum is gapless (eigenvalue with |E| = {min_abs:e}); use a mass m > 0 for the energy split")]
    Gapless { min_abs: f64 },

    #[error("sector space needs {dim} amplitudes, budget is {budget}")]
    DimensionBudget { dim: usize, budget: usize },

    #[error("Fock space for {sites} sites has dimension {dim}, limit is {limit}")]
    FockTooLarge { sites: usize, dim: usize, limit: usize },

    #[error("configuration sits on a node of the wave function (density {density:e}) at t = {time}")]
    Node { density: f64, time: f64 },

    #[error("Krylov step failed: error estimate {estimate:e} above tolerance {tolerance:e} at step size {step:e}")]
    StepFailure {
        estimate: f64,
        tolerance: f64,
        step: f64,
    },

    #[error("jump rate {rate:e} exceeded thinning bound {bound:e} at t = {time} (recomputed bound {recomputed:e}, {attempts} attempts)")]
    RateBound {
        time: f64,
        rate: f64,
        bound: f64,
        recomputed: f64,
        attempts: usize,
    },

    #[error("{excluded} of {total} trajectories hit a node (limit {limit_percent}%)")]
    TooManyNodes {
        excluded: usize,
        total: usize,
        limit_percent: f64,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
