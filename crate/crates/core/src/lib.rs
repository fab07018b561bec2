//! Learning-limited stealth data-injection attacks on DC state estimation.
//!
//! An attacker who knows the measurement Jacobian `H` but only has `k`
//! samples of the state builds its Gaussian attack from the sample
//! covariance. This crate evaluates the resulting KL cost exactly, samples
//! it by Monte Carlo, and predicts its mean and variance from
//! random-matrix asymptotics.
//!
//! Modules, bottom up:
//!
//! * [`grid_io`]: MATPOWER parsing and the DC Jacobian.
//! * [`covariance`]: state covariances, SNR calibration, Gaussian and
//!   Wishart samplers.
//! * [`attack`]: attack covariances, the KL cost and its spectral form.
//! * [`rmt`]: eta/Shannon transforms, the fixed point, ergodic cost and
//!   variance bounds.
//! * [`harness`]: seeded Monte Carlo experiments.
//! * [`reports`]: configuration, CSV, plot scripts and run manifests.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod covariance;
pub mod grid_io;
pub mod harness;
pub mod linalg;
pub mod reports;
pub mod rmt;
pub mod rng;
pub mod stats;

mod error;

pub use error::{Error, ErrorKind};
