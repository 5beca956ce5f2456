//! Gaussian model of filtered collinear type-II SPDC photon pairs.
//!
//! The biphoton mode function is approximated as φ ∝ exp(xᵀAx) over
//! x = (q_s^x, q_s^y, q_i^x, q_i^y, Ω_s, Ω_i). From the 6×6 matrix A the
//! crate computes heralded-photon purities, heralding efficiencies and
//! purity-efficiency factors in closed form, and cross-checks them against
//! brute-force quadrature.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dispersion;
pub mod emit;
pub mod error;
pub mod gaussian;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
