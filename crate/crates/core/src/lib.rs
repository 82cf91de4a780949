//! Explicit absolute-mean-error bounds for Markov chain Monte Carlo on
//! functionals that are only `L_p`-integrable (`1 < p < 2`), the burn-in and
//! sample-size budgets those bounds imply, and the machinery to check them
//! against simulated chains.
//!
//! * [`bounds`] evaluates the error bounds and the interpolation algebra.
//! * [`planner`] inverts the bounds into budgets and optimizes the
//!   integrability margin `delta`.
//! * [`chains`] provides finite chains with exact constants, an independence
//!   Metropolis–Hastings sampler and singular test functions.
//! * [`estimator`] estimates `e_1` by replication and fits convergence rates.
//! * [`validate`] bundles the bound-dominance and rate suites.

// `!(x > 0.0)` is how NaN gets rejected alongside the range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chains;
pub mod error;
pub mod estimator;
pub mod planner;
pub mod report;
pub mod rng;
pub mod validate;

pub use bounds::{BoundBreakdown, ChainParams, ExponentPair, FunctionClass};
pub use error::{Error, Result};
pub use planner::{Budget, PlanRequest, Regime};
