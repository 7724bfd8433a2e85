//! Extreme M-eigenvalues of fourth-order hierarchically symmetric tensors.
//!
//! The largest M-eigenvalue of an elasticity-type tensor `A` is recovered from
//! the unconstrained quartic merit function
//!
//! ```text
//! f_t(x, y) = 1/4 (x'x)^2 (y'y)^2 - 1/2 Axyxy - t/2 (x'x)(y'y)
//! ```
//!
//! whose nonzero critical points are M-eigenpairs with
//! `lambda = (x'x)(y'y) - t`. The crate provides:
//!
//! - [`tensor`]: storage, symmetry checks, contraction kernels, fixtures and file I/O.
//! - [`objective`]: the merit function, its gradient and eigenpair certification.
//! - [`mgm`]: the memory gradient method with a Wolfe line search and rescaling.
//! - [`shift`]: the adaptive shift driver that escalates `t` when the unshifted
//!   problem only yields the trivial critical point.
//! - [`power`]: an alternating shifted power iteration used as a baseline.
//! - [`bench`] and [`profile`]: experiment batteries and performance profiles.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod mgm;
pub mod objective;
pub mod power;
pub mod profile;
pub mod report;
pub mod rng;
pub mod shift;
pub mod tensor;

pub use error::{Error, Result};
pub use mgm::{GammaScheme, SolverConfig, ThetaVariant};
pub use objective::{MEigenpair, ShiftedObjective};
pub use report::{IterationRecord, SolveReport, SolveStatus};
pub use shift::DriverConfig;
pub use tensor::HierSymTensor;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
