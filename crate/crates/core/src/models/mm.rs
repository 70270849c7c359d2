//! Michaelis-Menten mechanism for substrate `s` and complex `c`.
//!
//! Enzyme conservation is folded in through `e0 - c`, so the state is the
//! pair `z = [s, c]`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmParams {
    pub k1f: f64,
    pub k1b: f64,
    pub k2: f64,
    pub e0: f64,
}

pub const VAR_NAMES: [&str; 2] = ["s", "c"];

pub fn vector_field(p: &MmParams, z: &DVector<f64>) -> DVector<f64> {
    let (s, c) = (z[0], z[1]);
    let binding = p.k1f * (p.e0 - c) * s - p.k1b * c;
    DVector::from_vec(vec![-binding, binding - p.k2 * c])
}

pub fn jacobian(p: &MmParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (s, c) = (z[0], z[1]);
    let free_enzyme = p.e0 - c;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            -p.k1f * free_enzyme,
            p.k1f * s + p.k1b,
            p.k1f * free_enzyme,
            -p.k1f * s - p.k1b - p.k2,
        ],
    )
}

/// dJ/dt along the flow: every Jacobian entry is affine in `z`, so this is
/// `k1f` times the pattern built from the current time derivatives.
pub fn jacobian_time_derivative(p: &MmParams, z: &DVector<f64>) -> DMatrix<f64> {
    let f = vector_field(p, z);
    let (sd, cd) = (f[0], f[1]);
    DMatrix::from_row_slice(2, 2, &[p.k1f * cd, p.k1f * sd, -p.k1f * cd, -p.k1f * sd])
}

/// Reactions: net reversible binding, then catalysis.
pub fn stoichiometry() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, -1.0])
}

pub fn reaction_rates(p: &MmParams, z: &DVector<f64>) -> DVector<f64> {
    let (s, c) = (z[0], z[1]);
    DVector::from_vec(vec![p.k1f * (p.e0 - c) * s - p.k1b * c, p.k2 * c])
}

pub fn rate_jacobian(p: &MmParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (s, c) = (z[0], z[1]);
    DMatrix::from_row_slice(
        2,
        2,
        &[p.k1f * (p.e0 - c), -p.k1f * s - p.k1b, 0.0, p.k2],
    )
}
