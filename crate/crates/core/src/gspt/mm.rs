//! Closed-form SIM approximations for the Michaelis-Menten mechanism:
//! two QSSA variants, partial equilibrium, CSP with one and two iterations
//! for either fast-variable assumption, and the eigenvector-based form.
//!
//! Residuals are generic over [`Scalar`] so the Newton solver can evaluate
//! exact derivatives through dual numbers. Expressions are hand-transcribed;
//! the unit and integration tests validate every one of them against the
//! numerically refined CSP machinery and against the explicit forms.

use crate::dual::Scalar;
use crate::error::{Result, SlimError};
use crate::models::MmParams;

use super::guard_denominator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MmSim {
    RQssa,
    SQssa,
    Pea,
    CspS1,
    CspS2,
    CspC1,
    CspC2,
    CspE,
}

pub(crate) fn residual<S: Scalar>(kind: MmSim, p: &MmParams, s: S, c: S) -> S {
    let kf = S::lift(p.k1f);
    let kb = S::lift(p.k1b);
    let k2 = S::lift(p.k2);
    let e0 = S::lift(p.e0);
    match kind {
        MmSim::RQssa => kf * (e0 - c) * s - kb * c,
        MmSim::SQssa => kf * (e0 - c) * s - kb * c - k2 * c,
        MmSim::Pea => {
            let kd = kb / kf;
            (e0 - c) * s - kd * c - (kd + s) / (kd + s + e0 - c) * k2 * c / kf
        }
        MmSim::CspS1 => {
            kb * c - kf * (e0 - c) * s
                + (kb + kf * s) * (c * (kb + k2 + kf * s) - e0 * kf * s) / (kf * (e0 - c))
        }
        MmSim::CspC1 => {
            kb * c + k2 * c - (e0 - c) * kf * s
                + (e0 - c) * kf * (c * kb - (e0 - c) * kf * s) / (kb + k2 + kf * s)
        }
        MmSim::CspE => {
            let disc = (kf * (e0 - c + s) + kb + k2).powi(2) + S::lift(4.0) * kf * k2 * (c - e0);
            S::lift(0.5)
                * (-c * c * kf + c * (e0 * kf - kb - kf * s - k2) + S::lift(2.0) * e0 * kf * s
                    - c * disc.sqrt())
        }
        MmSim::CspS2 => {
            let two = S::lift(2.0);
            let three = S::lift(3.0);
            let inner = (e0 * kf * s - c * (kb + kf * s + k2))
                * (two * c * c * kf * (kb + kf * s)
                    + e0 * kf * s * (kb + k2 - S::lift(4.0) * c * kf)
                    + e0 * kb * (kb + k2 - three * c * kf)
                    + e0 * e0 * kf * (kb + two * kf * s))
                - kf * (c - e0).powi(2)
                    * (kb + kf * (e0 + s - c))
                    * (c * (kb + kf * s) - e0 * kf * s);
            let num = (kb + kf * (e0 + s - c)) * inner;
            let den = kf
                * (c - e0)
                * (e0 * (three * c * c * kf * kf + kf * s * (kb + k2 - S::lift(6.0) * c * kf)
                    - S::lift(5.0) * c * kb * kf
                    + kb * kb
                    + kb * k2)
                    + c * c * kf * (three * kb + three * kf * s - c * kf)
                    + e0 * e0 * kf * (three * kf * (s - c) + two * kb)
                    + e0 * e0 * e0 * kf * kf);
            num / den
        }
        MmSim::CspC2 => {
            let two = S::lift(2.0);
            let three = S::lift(3.0);
            let four = S::lift(4.0);
            let six = S::lift(6.0);
            let w = kf * s + k2;
            // Numerator bracket, grouped by powers of k1b.
            let a_term = c * c * kf * kf * k2
                - c * kf * (e0 * kf * (kf * s + two * k2) + three * w * (three * kf * s + k2))
                + e0 * e0 * kf * kf * w
                + e0 * kf
                    * (S::lift(8.0) * kf * kf * s * s + S::lift(9.0) * kf * k2 * s + two * k2 * k2)
                + four * w.powi(3);
            let b_term = c * c - two * c * (e0 + three * s) + (e0 + s) * (e0 + four * s);
            let c_term = -c * kf * (e0 * kf + S::lift(9.0) * kf * s + six * k2)
                + e0 * e0 * kf * kf
                + e0 * kf * (S::lift(7.0) * kf * s + four * k2)
                + six * w * w;
            let d_term = -three * c * kf + two * e0 * kf + four * w;
            let bracket_num = kb * a_term
                + kf.powi(3) * k2 * s * b_term
                + kb * kb * c_term
                + kb.powi(3) * d_term
                + kf.powi(4) * s.powi(3) * (three * e0 - three * c + s)
                + kf * kf * k2 * k2 * s * (two * e0 - three * c + six * s)
                + kb.powi(4)
                + four * kf * k2.powi(3) * s
                + k2.powi(4);
            let num = (kb + kf * s + k2) * bracket_num;

            let g_term = kb * kb * (e0 * kf + S::lift(9.0) * kf * s + six * k2)
                + kb * (e0 * kf * (kf * s + two * k2) + three * w * (three * kf * s + k2))
                + three * kf * s * (e0 * kf * k2 + w * w)
                + three * kb.powi(3);
            let h_term = kf
                * s
                * (k2 * (three * e0 * e0 * kf * kf + four * e0 * kf * k2 + four * k2 * k2)
                    + two * kb * kb * (S::lift(5.0) * e0 * kf + six * k2)
                    + two * kb * (e0 * kf + k2) * (e0 * kf + six * k2)
                    + four * kb.powi(3))
                + two * kf * kf * s * s
                    * (S::lift(7.0) * e0 * kb * kf
                        + S::lift(5.0) * e0 * kf * k2
                        + three * kb * kb
                        + six * kb * k2
                        + three * k2 * k2)
                + two * kf.powi(3) * s.powi(3) * (three * e0 * kf + two * kb + two * k2)
                + (kb + k2)
                    * (kb * k2 * (two * e0 * kf + three * kb)
                        + kb * (e0 * kf + kb).powi(2)
                        + three * kb * k2 * k2
                        + k2.powi(3))
                + kf.powi(4) * s.powi(4);
            let i_term = -kf
                * s
                * (S::lift(5.0) * e0 * kb * kf
                    + four * e0 * kf * k2
                    + three * kb * kb
                    + six * kb * k2
                    + three * k2 * k2)
                - three * kf * kf * s * s * (e0 * kf + kb + k2)
                - (kb + k2) * (k2 * (e0 * kf + two * kb) + (e0 * kf + kb).powi(2) + k2 * k2)
                - kf.powi(3) * s.powi(3);
            let bracket_den = c.powi(3) * kf * kf * k2 * (kb + kf * s) - c * c * kf * g_term
                + c * h_term
                + e0 * kf * s * i_term;
            let den = -(kb * kf * (e0 - c + two * s)
                + kf * kf * s * (e0 - c)
                + kb * kb
                + two * kb * k2
                + w * w)
                * bracket_den;
            num / den
        }
    }
}

/// Index of the substrate and complex in the state vector.
const S_IDX: usize = 0;
const C_IDX: usize = 1;

/// Target variables each approximation can be solved for in closed form.
pub(crate) fn explicit_targets(kind: MmSim) -> &'static [usize] {
    match kind {
        MmSim::RQssa | MmSim::SQssa | MmSim::Pea | MmSim::CspS1 | MmSim::CspC1 => &[S_IDX, C_IDX],
        MmSim::CspS2 | MmSim::CspE => &[S_IDX],
        MmSim::CspC2 => &[],
    }
}

/// Evaluates the closed-form solution for `target` given the other variable.
pub(crate) fn explicit(kind: MmSim, p: &MmParams, target: usize, other: f64) -> Result<f64> {
    let MmParams { k1f: kf, k1b: kb, k2, e0 } = *p;
    let value = match (kind, target) {
        (MmSim::RQssa, S_IDX) => {
            let c = other;
            kb * c / guard_denominator(kf * (e0 - c))?
        }
        (MmSim::RQssa, C_IDX) => {
            let s = other;
            kf * e0 * s / guard_denominator(kb + kf * s)?
        }
        (MmSim::SQssa, S_IDX) => {
            let c = other;
            (kb + k2) * c / guard_denominator(kf * (e0 - c))?
        }
        (MmSim::SQssa, C_IDX) => {
            let s = other;
            kf * e0 * s / guard_denominator(k2 + kb + kf * s)?
        }
        (MmSim::Pea, S_IDX) => {
            let c = other;
            let disc = c * c * k2 * k2 - 2.0 * c * k2 * (kf * (c - e0).powi(2) - e0 * kb)
                + (kf * (c - e0).powi(2) + e0 * kb).powi(2);
            (c * c * kf - c * (2.0 * e0 * kf + 2.0 * kb + k2) + e0 * (e0 * kf + kb)
                - disc.sqrt())
                / guard_denominator(2.0 * kf * (c - e0))?
        }
        (MmSim::Pea, C_IDX) => {
            let s = other;
            let lead =
                kb * (e0 * kf + 2.0 * kf * s + k2) + kf * s * (2.0 * e0 * kf + kf * s + k2) + kb * kb;
            let disc =
                lead * lead - 4.0 * e0 * kf * kf * s * (kb + kf * s) * (kf * (e0 + s) + kb);
            (lead - disc.sqrt()) / guard_denominator(2.0 * kf * (kb + kf * s))?
        }
        (MmSim::CspS1, S_IDX) => {
            let c = other;
            let disc = (e0 * kb + (c - e0).powi(2) * kf).powi(2)
                - 2.0 * c * ((c - e0).powi(2) * kf - e0 * kb) * k2
                + c * c * k2 * k2;
            (c * c * kf - c * (2.0 * kb + 2.0 * e0 * kf + k2) + e0 * (kb + e0 * kf)
                - disc.sqrt())
                / guard_denominator(2.0 * kf * (c - e0))?
        }
        (MmSim::CspS1, C_IDX) => {
            let s = other;
            let lead = kb * kb
                + kf * s * (2.0 * e0 * kf + k2 + kf * s)
                + kb * (e0 * kf + k2 + 2.0 * kf * s);
            let disc =
                lead * lead - 4.0 * e0 * kf * kf * s * (kb + kf * s) * (kb + kf * (e0 + s));
            (lead - disc.sqrt()) / guard_denominator(2.0 * kf * (kb + kf * s))?
        }
        (MmSim::CspS2, S_IDX) => {
            let c = other;
            let bracket = 3.0 * c * c * kf + e0 * (-6.0 * c * kf + 3.0 * e0 * kf + kb + k2);
            let d1 = 3.0 * c * c * kf - e0 * (6.0 * c * kf - 3.0 * e0 * kf - kb - k2);
            let e1 = -e0
                * (3.0 * c * c * kf * kf - 5.0 * c * kb * kf - 3.0 * c * kf * k2
                    + kb * kb
                    + 2.0 * kb * k2
                    + k2 * k2)
                + c * c * kf * (c * kf - 3.0 * kb - 2.0 * k2)
                - e0 * e0 * kf * (-3.0 * c * kf + 2.0 * kb + k2)
                - e0.powi(3) * kf * kf;
            let f1 = c.powi(4) * kf * kf - 2.0 * c.powi(3) * kf * (2.0 * e0 * kf + 3.0 * kb + k2)
                + 2.0 * c * c * e0 * kf * (3.0 * e0 * kf + 7.0 * kb + 2.0 * k2)
                - c * e0
                    * (4.0 * e0 * e0 * kf * kf
                        + 10.0 * e0 * kb * kf
                        + 2.0 * e0 * kf * k2
                        + 2.0 * kb * kb
                        + 3.0 * kb * k2
                        + k2 * k2)
                + e0 * e0 * ((e0 * kf + kb).powi(2) + kb * k2);
            let disc = kf * kf * (4.0 * c * kb * (c - e0) * d1 * e1 + f1 * f1);
            (e0 * kf * (kb + k2) * (e0 * kb - c * (2.0 * kb + k2))
                - 2.0 * kf * kf * (c - e0).powi(2) * (c * (3.0 * kb + k2) - e0 * kb)
                + kf.powi(3) * (c - e0).powi(4)
                - disc.sqrt())
                / guard_denominator(2.0 * kf * kf * (c - e0) * bracket)?
        }
        (MmSim::CspC1, S_IDX) => {
            let c = other;
            let disc = 2.0 * k2 * (kf * (e0 - 2.0 * c) * (c - e0).powi(2) + e0 * e0 * kb)
                + (kf * (c - e0).powi(2) + e0 * kb).powi(2)
                + e0 * e0 * k2 * k2;
            (c * c * kf + (e0 - 2.0 * c) * (e0 * kf + kb + k2) - disc.sqrt())
                / guard_denominator(2.0 * kf * (c - e0))?
        }
        (MmSim::CspC1, C_IDX) => {
            let s = other;
            let lead = e0 * kf * (kb + 2.0 * kf * s) + (kb + kf * s + k2).powi(2);
            let disc =
                lead * lead - 4.0 * e0 * kf * kf * s * (kb + kf * s) * (kf * (e0 + s) + kb + k2);
            (lead - disc.sqrt()) / guard_denominator(2.0 * kf * (kb + kf * s))?
        }
        (MmSim::CspE, S_IDX) => {
            let c = other;
            let disc = (kf * (e0 - c).powi(2) - e0 * (kb + k2)).powi(2)
                + 4.0 * e0 * kb * kf * (c - e0).powi(2);
            c * (c * c * kf - e0 * (2.0 * c * kf + kb + k2) + e0 * e0 * kf - disc.sqrt())
                / guard_denominator(2.0 * e0 * kf * (c - e0))?
        }
        _ => {
            return Err(SlimError::InvalidInput(format!(
                "mm {kind:?} has no explicit form for variable {target}"
            )))
        }
    };
    Ok(value)
}
