//! One-compartment target-mediated drug disposition mechanism for ligand
//! `L`, receptor `R`, and complex `RL`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmddParams {
    pub kon: f64,
    pub koff: f64,
    pub kel: f64,
    pub ksyn: f64,
    pub kdeg: f64,
    pub kint: f64,
}

impl TmddParams {
    /// Receptor equilibrium `ksyn / kdeg`. The quoted constants give
    /// 12.3596..., which the source material rounds to 12; the exact ratio
    /// is used everywhere here.
    pub fn receptor_equilibrium(&self) -> f64 {
        self.ksyn / self.kdeg
    }
}

pub const VAR_NAMES: [&str; 3] = ["L", "R", "RL"];

pub fn vector_field(p: &TmddParams, z: &DVector<f64>) -> DVector<f64> {
    let (l, r, rl) = (z[0], z[1], z[2]);
    let binding = p.kon * l * r - p.koff * rl;
    DVector::from_vec(vec![
        -binding - p.kel * l,
        -binding + p.ksyn - p.kdeg * r,
        binding - p.kint * rl,
    ])
}

pub fn jacobian(p: &TmddParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (l, r) = (z[0], z[1]);
    DMatrix::from_row_slice(
        3,
        3,
        &[
            -p.kon * r - p.kel,
            -p.kon * l,
            p.koff,
            -p.kon * r,
            -p.kon * l - p.kdeg,
            p.koff,
            p.kon * r,
            p.kon * l,
            -p.koff - p.kint,
        ],
    )
}

pub fn jacobian_time_derivative(p: &TmddParams, z: &DVector<f64>) -> DMatrix<f64> {
    let f = vector_field(p, z);
    let (ld, rd) = (f[0], f[1]);
    DMatrix::from_row_slice(
        3,
        3,
        &[
            -p.kon * rd,
            -p.kon * ld,
            0.0,
            -p.kon * rd,
            -p.kon * ld,
            0.0,
            p.kon * rd,
            p.kon * ld,
            0.0,
        ],
    )
}

/// Reactions: net reversible binding, ligand elimination, receptor
/// synthesis, receptor degradation, complex internalization.
pub fn stoichiometry() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        3,
        5,
        &[
            -1.0, -1.0, 0.0, 0.0, 0.0, //
            -1.0, 0.0, 1.0, -1.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, -1.0,
        ],
    )
}

pub fn reaction_rates(p: &TmddParams, z: &DVector<f64>) -> DVector<f64> {
    let (l, r, rl) = (z[0], z[1], z[2]);
    DVector::from_vec(vec![
        p.kon * l * r - p.koff * rl,
        p.kel * l,
        p.ksyn,
        p.kdeg * r,
        p.kint * rl,
    ])
}

pub fn rate_jacobian(p: &TmddParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (l, r) = (z[0], z[1]);
    DMatrix::from_row_slice(
        5,
        3,
        &[
            p.kon * r,
            p.kon * l,
            -p.koff, //
            p.kel,
            0.0,
            0.0, //
            0.0,
            0.0,
            0.0, //
            0.0,
            p.kdeg,
            0.0, //
            0.0,
            0.0,
            p.kint,
        ],
    )
}
