//! Discovery of slow invariant manifolds (SIMs) of stiff ODE systems.
//!
//! The crate trains a physics-informed single-layer network jointly with
//! linear fast/slow variable transformations and implements the classical
//! GSPT baselines (QSSA, PEA, CSP with one and two iterations) for
//! head-to-head accuracy comparison on three benchmark reaction systems:
//! Michaelis-Menten, target-mediated drug disposition, and a fully
//! competitive substrate-inhibitor mechanism.

pub mod csp;
pub mod dual;
pub mod error;
pub mod integrator;
pub mod models;
pub mod numerics;

pub use error::{Result, SlimError};
pub use numerics::{eigendecompose, solve_linear, EigenSystem};
