//! Robust learning of binary product distributions and agnostic tomography of
//! product mixed states.
//!
//! The crate is organized around a weighted filter that removes adversarially
//! corrupted samples by repeatedly finding a certificate matrix witnessing
//! excess covariance, plus the machinery that certificate needs:
//!
//! - [`dualnorm`] — the test-vector set and its PSD relaxation, the dual norms
//!   they induce, and total-variation / Hellinger distance computations for
//!   binary product distributions.
//! - [`convexopt`] — approximate linear maximization over the certificate set
//!   (projected ascent with Dykstra projections and a feasibility finisher).
//! - [`filter`] — preprocessing reductions, the weighted filter loop, and the
//!   full robust learner.
//! - [`quantumsim`] — classical simulation of single-qubit single-copy
//!   measurements on contaminated product mixed states, and the two-round
//!   adaptive tomography pipeline built on the robust learner.
//! - [`lowerbound`] — moment-matched bias distributions, the hard state pair,
//!   and the Monte-Carlo indistinguishability experiment for non-adaptive
//!   product-basis measurements.
//! - [`oracles`] — independent brute-force references used by tests and the
//!   benchmark harness. Exponential-cost; guarded by small-`n` preconditions.
//! - [`harness`] — experiment orchestration, config parsing, CSV emission and
//!   SVG plots for the CLI.

pub mod convexopt;
pub mod dualnorm;
pub mod error;
pub mod filter;
pub mod harness;
pub mod lowerbound;
pub mod mathutil;
pub mod oracles;
pub mod quantumsim;
pub mod samples;
pub mod seeding;

pub use error::{Error, Result};
