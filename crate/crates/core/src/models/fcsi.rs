//! Fully competitive substrate-inhibitor mechanism: two substrates bind the
//! same enzyme site, each following Michaelis-Menten kinetics.
//!
//! Two state-space realizations share the parameter set:
//! - the original system in `z = [s1, c1, s2, c2]`;
//! - the total-substrate transformed system in `z = [s1bar, c1, s2bar, c2]`
//!   where `s_i_bar = s_i + c_i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcsiParams {
    pub k1f: f64,
    pub k1b: f64,
    pub k2: f64,
    pub k3f: f64,
    pub k3b: f64,
    pub k4: f64,
    pub e0: f64,
}

pub const VAR_NAMES_ORIGINAL: [&str; 4] = ["s1", "c1", "s2", "c2"];
pub const VAR_NAMES_TRANSFORMED: [&str; 4] = ["s1bar", "c1", "s2bar", "c2"];

fn free_enzyme(p: &FcsiParams, z: &DVector<f64>) -> f64 {
    p.e0 - z[1] - z[3]
}

pub fn vector_field_original(p: &FcsiParams, z: &DVector<f64>) -> DVector<f64> {
    let (s1, c1, s2, c2) = (z[0], z[1], z[2], z[3]);
    let e = free_enzyme(p, z);
    let b1 = p.k1f * e * s1 - p.k1b * c1;
    let b2 = p.k3f * e * s2 - p.k3b * c2;
    DVector::from_vec(vec![-b1, b1 - p.k2 * c1, -b2, b2 - p.k4 * c2])
}

pub fn jacobian_original(p: &FcsiParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (s1, s2) = (z[0], z[2]);
    let e = free_enzyme(p, z);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            -p.k1f * e,
            p.k1f * s1 + p.k1b,
            0.0,
            p.k1f * s1, //
            p.k1f * e,
            -p.k1f * s1 - p.k1b - p.k2,
            0.0,
            -p.k1f * s1, //
            0.0,
            p.k3f * s2,
            -p.k3f * e,
            p.k3f * s2 + p.k3b, //
            0.0,
            -p.k3f * s2,
            p.k3f * e,
            -p.k3f * s2 - p.k3b - p.k4,
        ],
    )
}

pub fn jacobian_time_derivative_original(p: &FcsiParams, z: &DVector<f64>) -> DMatrix<f64> {
    let f = vector_field_original(p, z);
    let (s1d, c1d, s2d, c2d) = (f[0], f[1], f[2], f[3]);
    let ed = -(c1d + c2d);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            -p.k1f * ed,
            p.k1f * s1d,
            0.0,
            p.k1f * s1d, //
            p.k1f * ed,
            -p.k1f * s1d,
            0.0,
            -p.k1f * s1d, //
            0.0,
            p.k3f * s2d,
            -p.k3f * ed,
            p.k3f * s2d, //
            0.0,
            -p.k3f * s2d,
            p.k3f * ed,
            -p.k3f * s2d,
        ],
    )
}

/// Reactions: net binding 1, catalysis 1, net binding 2, catalysis 2.
pub fn stoichiometry_original() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            -1.0, 0.0, 0.0, 0.0, //
            1.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, -1.0, 0.0, //
            0.0, 0.0, 1.0, -1.0,
        ],
    )
}

pub fn reaction_rates_original(p: &FcsiParams, z: &DVector<f64>) -> DVector<f64> {
    let (s1, c1, s2, c2) = (z[0], z[1], z[2], z[3]);
    let e = free_enzyme(p, z);
    DVector::from_vec(vec![
        p.k1f * e * s1 - p.k1b * c1,
        p.k2 * c1,
        p.k3f * e * s2 - p.k3b * c2,
        p.k4 * c2,
    ])
}

pub fn rate_jacobian_original(p: &FcsiParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (s1, s2) = (z[0], z[2]);
    let e = free_enzyme(p, z);
    DMatrix::from_row_slice(
        4,
        4,
        &[
            p.k1f * e,
            -p.k1f * s1 - p.k1b,
            0.0,
            -p.k1f * s1, //
            0.0,
            p.k2,
            0.0,
            0.0, //
            0.0,
            -p.k3f * s2,
            p.k3f * e,
            -p.k3f * s2 - p.k3b, //
            0.0,
            0.0,
            0.0,
            p.k4,
        ],
    )
}

pub fn vector_field_transformed(p: &FcsiParams, z: &DVector<f64>) -> DVector<f64> {
    let (s1b, c1, s2b, c2) = (z[0], z[1], z[2], z[3]);
    let e = free_enzyme(p, z);
    DVector::from_vec(vec![
        -p.k2 * c1,
        p.k1f * e * (s1b - c1) - (p.k1b + p.k2) * c1,
        -p.k4 * c2,
        p.k3f * e * (s2b - c2) - (p.k3b + p.k4) * c2,
    ])
}

pub fn jacobian_transformed(p: &FcsiParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (s1b, c1, s2b, c2) = (z[0], z[1], z[2], z[3]);
    let e = free_enzyme(p, z);
    let u1 = s1b - c1;
    let u2 = s2b - c2;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0,
            -p.k2,
            0.0,
            0.0, //
            p.k1f * e,
            -p.k1f * e - p.k1f * u1 - p.k1b - p.k2,
            0.0,
            -p.k1f * u1, //
            0.0,
            0.0,
            0.0,
            -p.k4, //
            0.0,
            -p.k3f * u2,
            p.k3f * e,
            -p.k3f * e - p.k3f * u2 - p.k3b - p.k4,
        ],
    )
}

pub fn jacobian_time_derivative_transformed(p: &FcsiParams, z: &DVector<f64>) -> DMatrix<f64> {
    let f = vector_field_transformed(p, z);
    let (s1bd, c1d, s2bd, c2d) = (f[0], f[1], f[2], f[3]);
    let ed = -(c1d + c2d);
    let u1d = s1bd - c1d;
    let u2d = s2bd - c2d;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0,
            0.0,
            0.0,
            0.0, //
            p.k1f * ed,
            -p.k1f * ed - p.k1f * u1d,
            0.0,
            -p.k1f * u1d, //
            0.0,
            0.0,
            0.0,
            0.0, //
            0.0,
            -p.k3f * u2d,
            p.k3f * ed,
            -p.k3f * ed - p.k3f * u2d,
        ],
    )
}

pub fn stoichiometry_transformed() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, -1.0, 0.0, 0.0, //
            1.0, -1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, -1.0,
        ],
    )
}

pub fn reaction_rates_transformed(p: &FcsiParams, z: &DVector<f64>) -> DVector<f64> {
    let (s1b, c1, s2b, c2) = (z[0], z[1], z[2], z[3]);
    let e = free_enzyme(p, z);
    DVector::from_vec(vec![
        p.k1f * e * (s1b - c1) - p.k1b * c1,
        p.k2 * c1,
        p.k3f * e * (s2b - c2) - p.k3b * c2,
        p.k4 * c2,
    ])
}

pub fn rate_jacobian_transformed(p: &FcsiParams, z: &DVector<f64>) -> DMatrix<f64> {
    let (s1b, c1, s2b, c2) = (z[0], z[1], z[2], z[3]);
    let e = free_enzyme(p, z);
    let u1 = s1b - c1;
    let u2 = s2b - c2;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            p.k1f * e,
            -p.k1f * e - p.k1f * u1 - p.k1b,
            0.0,
            -p.k1f * u1, //
            0.0,
            p.k2,
            0.0,
            0.0, //
            0.0,
            -p.k3f * u2,
            p.k3f * e,
            -p.k3f * e - p.k3f * u2 - p.k3b, //
            0.0,
            0.0,
            0.0,
            p.k4,
        ],
    )
}
