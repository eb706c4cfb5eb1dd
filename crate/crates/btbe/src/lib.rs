//! Real-time monitoring of bivariate time-between-events (BTBE) data.
//!
//! Event pairs `(x1, x2)` — one time per subprocess — are observed
//! asynchronously, interleaved into a single superimposed stream, and each
//! event is judged against a dynamic control limit the moment it arrives:
//! the first event of a pair against a fixed limit, the second against a
//! limit conditioned on the realized first event. Because the chart never
//! waits for a pair to complete, it can flag a shift on a first event alone
//! and it labels every signal with the event rank that caused it.
//!
//! The crate provides:
//!
//! - [`lifetimes`] — the three supported bivariate lifetime models
//!   (Gumbel bivariate exponential, Marshall-Olkin bivariate exponential and
//!   Weibull), their samplers, order-statistic laws, and moments;
//! - [`chart`] — control-limit construction and the streaming monitor;
//! - [`performance`] — average time-to-signal (ATS), both in closed form and
//!   by seeded Monte Carlo;
//! - [`estimation`] — phase-I parameter fitting, including an EM algorithm
//!   for Weibull shock models observed only on `x1 < x2`;
//! - [`mewma`] — a vector-based MEWMA chart used as a comparison baseline;
//! - [`numerics`] — the special functions, quadrature, root finding, and
//!   reproducible RNG streams everything else is built on.

#![forbid(unsafe_code)]

pub mod chart;
pub mod estimation;
pub mod lifetimes;
pub mod mewma;
pub mod numerics;
pub mod performance;
pub mod scenarios;
