//! Small-signal stability of power systems and demand-response load shifting.
//!
//! The crate models swing dynamics as differential-algebraic equations
//! ([`dae`]), solves the AC power flow ([`powerflow`]), extracts the finite
//! spectrum of the linearized model and its eigenvalue sensitivities
//! ([`smallsignal`]), and improves the smallest damping ratio by iterative
//! linear programming over demand, generation or stabilizer gains ([`ilp`]).
//! [`studies`] reproduces the IEEE 14-bus experiments and [`cli`] exposes
//! them on the command line.

pub mod cli;
pub mod dae;
pub mod error;
pub mod ilp;
pub mod netcase;
pub mod powerflow;
pub mod smallsignal;
pub mod studies;

pub use error::{Error, Result};
