//! Shared numerical kernel: Lambert W, the gamma function, adaptive
//! quadrature, bracketed root finding, and seedable random-number streams.
//!
//! Everything here is pure and reentrant. [`RngStream`] instances are the
//! only stateful objects; give each concurrent task its own stream.

mod lambert;
mod quad;
mod rng;
mod root;
mod special;

pub use lambert::{lambert_w0, lambert_w0_ln};
pub use quad::{integrate, integrate_semiinf};
pub use rng::RngStream;
pub use root::find_root;
pub use special::gamma;

use thiserror::Error;

/// Errors produced by the numerical kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    /// Input outside the mathematical domain of the routine.
    #[error("argument {value} outside domain: {reason}")]
    Domain { value: f64, reason: &'static str },

    /// Iteration budget exhausted before reaching the requested tolerance.
    #[error("no convergence after {iterations} iterations (last estimate {last})")]
    NoConvergence { iterations: u32, last: f64 },

    /// A root bracket whose endpoints do not straddle a sign change.
    #[error("invalid bracket [{lo}, {hi}]: f has the same sign at both ends")]
    InvalidBracket { lo: f64, hi: f64 },

    /// An integrand or iterate produced NaN/infinity.
    #[error("non-finite value encountered at {at}")]
    NonFinite { at: f64 },
}

/// Absolute/relative tolerances plus an iteration budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: u32,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: u32) -> Result<Self, NumericsError> {
        if !(abs_tol > 0.0) {
            return Err(NumericsError::Domain {
                value: abs_tol,
                reason: "abs_tol must be positive",
            });
        }
        if !(rel_tol > 0.0) {
            return Err(NumericsError::Domain {
                value: rel_tol,
                reason: "rel_tol must be positive",
            });
        }
        if max_iter == 0 {
            return Err(NumericsError::Domain {
                value: 0.0,
                reason: "max_iter must be at least 1",
            });
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }

    /// Tight default used for the analytic cross-checks: 1e-12 absolute and
    /// relative, 1000 iterations.
    pub fn strict() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_iter: 1000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_iter: 500,
        }
    }
}
