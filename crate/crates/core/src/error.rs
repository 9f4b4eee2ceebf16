use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid argument: bad label, wrong layout, out-of-range occupation,
    /// dimension mismatch and similar contract violations.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested representation exceeds a configured size cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The adaptive integrator could not continue.
    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    /// Evolve-to-convergence reached its time budget without settling.
    #[error(
        "steady state not reached by t = {t_max}: residual ||drho/dt||_F = {residual:.3e} \
         (tolerance {tolerance:.1e}); the dynamics may be non-dissipative (kappa = 0?) \
         or need a longer time budget"
    )]
    NonConvergence {
        t_max: f64,
        residual: f64,
        tolerance: f64,
    },

    /// A numerical evaluation failed (singular denominator, divergent series).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A truncated representation drops too much weight.
    #[error(
        "truncation error: dropped tail weight {tail_weight:.3e} exceeds {threshold:.1e} \
         at dim {dim}; increase the truncation dimension"
    )]
    Truncation {
        tail_weight: f64,
        threshold: f64,
        dim: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
