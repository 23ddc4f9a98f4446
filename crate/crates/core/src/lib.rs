//! Exact minimum sets of univariate convex functions.
//!
//! The smallest and largest minimizers `sigma(f) = min A(f)` and
//! `tau(f) = max A(f)` are located through sign tests on the one-sided
//! derivatives: `sigma(f) <= x` iff `D+f(x) >= 0`, and `tau(f) >= x` iff
//! `D-f(x) <= 0`. Piecewise-linear functions are handled in exact rational
//! arithmetic; black-box functions go through difference-quotient bisection.
//!
//! On top of that sit two verification harnesses: [`convergence`] checks the
//! semicontinuity statements for deterministic sequences and nets, and
//! [`stochastic`] runs seeded Monte Carlo experiments for the argmin limit
//! theorems of convex stochastic processes.

pub mod argmin;
pub mod convergence;
pub mod convex;
mod error;
pub mod exec;
pub mod random;
pub mod rational;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use rational::Rational;
