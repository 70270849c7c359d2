//! Computational singular perturbation machinery: the fast-dimension
//! criterion, the basis-refinement iterations, and the PEA/QSSA basis
//! constructions with their SIM residuals.
//!
//! Refinement bookkeeping follows the `(k, m)` notation: `k` counts
//! `B^r`-refinements and `m` counts `A_r`-refinements. The second
//! `B^r`-refinement needs `dB^r(1,1)/dt`, which is assembled from quantities
//! of the earlier steps; those are carried along inside the basis.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, SlimError};
use crate::models::{Dynamics, StoichiometricForm};
use crate::numerics::{self, eigendecompose};

/// Condition limit above which the fast-block inversion is refused.
const LAMBDA_COND_MAX: f64 = 1e12;

/// Orthonormal set of fast/slow basis vectors and their duals.
///
/// Invariants: `B^r A_r = I`, `B^r A_s = 0`, `B^s A_r = 0`, `B^s A_s = I`,
/// and `A_r B^r + A_s B^s = I`, each to 1e-10.
#[derive(Debug, Clone)]
pub struct FastSlowBasis {
    pub a_r: DMatrix<f64>,
    pub a_s: DMatrix<f64>,
    pub b_r: DMatrix<f64>,
    pub b_s: DMatrix<f64>,
    /// `(k, m)` refinement tag.
    pub iteration: (u8, u8),
    /// Products from the first iteration needed by the curvature-aware
    /// second `B^r`-refinement: `T(0,0) B^r(0,0)` and
    /// `I - A_r(0,0) B^r(1,0)`.
    curvature: Option<CurvatureContext>,
}

#[derive(Debug, Clone)]
struct CurvatureContext {
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl FastSlowBasis {
    pub fn n(&self) -> usize {
        self.a_r.nrows()
    }

    pub fn m(&self) -> usize {
        self.a_r.ncols()
    }

    /// Maximum deviation from the orthogonality relations.
    pub fn orthogonality_defect(&self) -> f64 {
        let (n, m) = (self.n(), self.m());
        let defects = [
            (&self.b_r * &self.a_r - DMatrix::identity(m, m)).amax(),
            (&self.b_r * &self.a_s).amax(),
            (&self.b_s * &self.a_r).amax(),
            (&self.b_s * &self.a_s - DMatrix::identity(n - m, n - m)).amax(),
            (&self.a_r * &self.b_r + &self.a_s * &self.b_s - DMatrix::identity(n, n)).amax(),
        ];
        defects.into_iter().fold(0.0, f64::max)
    }
}

/// Projection of the vector field onto the fast subspace; its vanishing
/// defines the SIM approximation.
#[derive(Debug, Clone)]
pub struct SimResidual {
    pub amplitude: DVector<f64>,
    pub provenance: BasisProvenance,
    pub point: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisProvenance {
    Csp1,
    Csp2,
    Pea,
    Qssa,
}

/// Largest `M < N` for which the exhausted fast amplitudes, scaled by the
/// first non-exhausted timescale, stay below `eps_rel * |z| + eps_abs`
/// componentwise. Candidate values of `M` that would split a
/// complex-conjugate eigenvalue pair are skipped.
pub fn estimate_fast_dimension(
    system: &impl Dynamics,
    z: &DVector<f64>,
    eps_rel: f64,
    eps_abs: &DVector<f64>,
) -> Result<usize> {
    let n = system.dim();
    if !(eps_rel > 0.0 && eps_rel < 1.0) {
        return Err(SlimError::InvalidInput(format!(
            "eps_rel = {eps_rel} outside (0, 1)"
        )));
    }
    if eps_abs.len() != n || eps_abs.iter().any(|e| !(*e > 0.0)) {
        return Err(SlimError::InvalidInput(
            "eps_abs must be a positive N-vector".into(),
        ));
    }
    let es = eigendecompose(&system.jac(z)?)?;
    let f = system.f(z)?;
    let fc = f.map(|x| Complex::new(x, 0.0));
    let thresholds: Vec<f64> = (0..n).map(|i| eps_rel * z[i].abs() + eps_abs[i]).collect();

    let mut best = 0usize;
    let mut acc = DVector::<Complex<f64>>::zeros(n);
    for m in 1..n {
        acc += es.projector(m - 1) * &fc;
        // Conjugate pair straddling the M boundary: this M is not a valid
        // timescale split.
        let (lam_m, lam_next) = (es.eigenvalues[m - 1], es.eigenvalues[m]);
        if lam_m.im != 0.0 && (lam_m.conj() - lam_next).norm() <= 1e-12 * lam_m.norm() {
            continue;
        }
        let tau_inv = lam_next.norm();
        if tau_inv == 0.0 {
            continue;
        }
        let scale = acc.iter().map(|c| c.norm()).fold(0.0, f64::max) / tau_inv;
        let mut ok = true;
        for i in 0..n {
            let amp = numerics::real_part_checked(acc[i] / tau_inv, scale)?;
            if amp.abs() >= thresholds[i] {
                ok = false;
                break;
            }
        }
        if ok {
            best = m;
        }
    }
    Ok(best)
}

/// Unit-coordinate initial basis with the given fast-variable columns,
/// satisfying the orthogonality relations exactly.
pub fn csp_initial_basis(n: usize, fast_variable_indices: &[usize]) -> Result<FastSlowBasis> {
    let m = fast_variable_indices.len();
    if m == 0 || m >= n {
        return Err(SlimError::InvalidInput(format!(
            "fast dimension {m} must satisfy 0 < M < N = {n}"
        )));
    }
    let mut seen = vec![false; n];
    for &i in fast_variable_indices {
        if i >= n || seen[i] {
            return Err(SlimError::InvalidInput(format!(
                "bad fast-variable index {i}"
            )));
        }
        seen[i] = true;
    }
    let slow: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
    let mut a_r = DMatrix::zeros(n, m);
    let mut b_r = DMatrix::zeros(m, n);
    for (col, &i) in fast_variable_indices.iter().enumerate() {
        a_r[(i, col)] = 1.0;
        b_r[(col, i)] = 1.0;
    }
    let mut a_s = DMatrix::zeros(n, n - m);
    let mut b_s = DMatrix::zeros(n - m, n);
    for (col, &i) in slow.iter().enumerate() {
        a_s[(i, col)] = 1.0;
        b_s[(col, i)] = 1.0;
    }
    Ok(FastSlowBasis {
        a_r,
        a_s,
        b_r,
        b_s,
        iteration: (0, 0),
        curvature: None,
    })
}

fn lambda_inverse(
    b_r: &DMatrix<f64>,
    j_like: &DMatrix<f64>,
    a_r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let lambda = b_r * j_like * a_r;
    numerics::invert_with_condition(&lambda, LAMBDA_COND_MAX)
}

/// `B^r`-refinement. With `use_time_derivative = false` this is the plain
/// update `B^r <- T B^r J`; with `true` it is the curvature-aware update
/// that folds in `dB^r/dt` built from the model's `dJ/dt`.
pub fn csp_refine_br(
    system: &impl Dynamics,
    z: &DVector<f64>,
    basis: &FastSlowBasis,
    use_time_derivative: bool,
) -> Result<FastSlowBasis> {
    let n = basis.n();
    let j = system.jac(z)?;
    if !use_time_derivative {
        let t = lambda_inverse(&basis.b_r, &j, &basis.a_r)?;
        let b_r_new = &t * &basis.b_r * &j;
        let a_s_new = (DMatrix::identity(n, n) - &basis.a_r * &b_r_new) * &basis.a_s;
        // Everything the later curvature refinement will need from this step.
        let curvature = Some(CurvatureContext {
            left: &t * &basis.b_r,
            right: DMatrix::identity(n, n) - &basis.a_r * &b_r_new,
        });
        Ok(FastSlowBasis {
            a_r: basis.a_r.clone(),
            a_s: a_s_new,
            b_r: b_r_new,
            b_s: basis.b_s.clone(),
            iteration: (basis.iteration.0 + 1, basis.iteration.1),
            curvature,
        })
    } else {
        let ctx = basis.curvature.as_ref().ok_or_else(|| {
            SlimError::InvalidInput(
                "curvature refinement needs a basis produced by a previous refinement".into(),
            )
        })?;
        let db_dt = &ctx.left * system.jac_dt(z)? * &ctx.right;
        let op = &db_dt + &basis.b_r * &j;
        let t = lambda_inverse(&op, &DMatrix::identity(n, n), &basis.a_r)?;
        let b_r_new = &t * &op;
        let a_s_new = (DMatrix::identity(n, n) - &basis.a_r * &b_r_new) * &basis.a_s;
        Ok(FastSlowBasis {
            a_r: basis.a_r.clone(),
            a_s: a_s_new,
            b_r: b_r_new,
            b_s: basis.b_s.clone(),
            iteration: (basis.iteration.0 + 1, basis.iteration.1),
            curvature: basis.curvature.clone(),
        })
    }
}

/// `A_r`-refinement: `A_r <- J A_r T`, with the dual slow rows updated to
/// preserve orthogonality.
pub fn csp_refine_ar(
    system: &impl Dynamics,
    z: &DVector<f64>,
    basis: &FastSlowBasis,
) -> Result<FastSlowBasis> {
    let n = basis.n();
    let j = system.jac(z)?;
    let t = lambda_inverse(&basis.b_r, &j, &basis.a_r)?;
    let a_r_new = &j * &basis.a_r * &t;
    let b_s_new = &basis.b_s * (DMatrix::identity(n, n) - &a_r_new * &basis.b_r);
    Ok(FastSlowBasis {
        a_r: a_r_new,
        a_s: basis.a_s.clone(),
        b_r: basis.b_r.clone(),
        b_s: b_s_new,
        iteration: (basis.iteration.0, basis.iteration.1 + 1),
        curvature: basis.curvature.clone(),
    })
}

/// Fast amplitudes `f^r = B^r F(z)` for the given basis.
pub fn csp_sim_residual(
    system: &impl Dynamics,
    z: &DVector<f64>,
    basis: &FastSlowBasis,
) -> Result<SimResidual> {
    let f = system.f(z)?;
    let provenance = if basis.iteration.0 >= 2 {
        BasisProvenance::Csp2
    } else {
        BasisProvenance::Csp1
    };
    Ok(SimResidual {
        amplitude: &basis.b_r * f,
        provenance,
        point: z.clone(),
    })
}

/// Runs the refinement chain from the coordinate initialization:
/// one iteration is `B^r` + `A_r`; the second adds the curvature-aware
/// `B^r`-refinement.
pub fn csp_basis_after(
    system: &impl Dynamics,
    z: &DVector<f64>,
    fast_variable_indices: &[usize],
    iterations: u8,
) -> Result<FastSlowBasis> {
    if !(1..=2).contains(&iterations) {
        return Err(SlimError::InvalidInput(format!(
            "iterations must be 1 or 2, got {iterations}"
        )));
    }
    let basis = csp_initial_basis(system.dim(), fast_variable_indices)?;
    let basis = csp_refine_br(system, z, &basis, false)?;
    let basis = csp_refine_ar(system, z, &basis)?;
    if iterations == 1 {
        return Ok(basis);
    }
    csp_refine_br(system, z, &basis, true)
}

/// Residual of the CSP SIM approximation after one or two iterations.
pub fn csp_residual_after(
    system: &impl Dynamics,
    z: &DVector<f64>,
    fast_variable_indices: &[usize],
    iterations: u8,
) -> Result<DVector<f64>> {
    let basis = csp_basis_after(system, z, fast_variable_indices, iterations)?;
    Ok(csp_sim_residual(system, z, &basis)?.amplitude)
}

fn permute_to_original(form: &StoichiometricForm, reordered: FastSlowBasis) -> FastSlowBasis {
    let n = form.n();
    let m = form.m;
    let mut a_r = DMatrix::zeros(n, m);
    let mut a_s = DMatrix::zeros(n, n - m);
    let mut b_r = DMatrix::zeros(m, n);
    let mut b_s = DMatrix::zeros(n - m, n);
    for (pos, &orig) in form.var_order.iter().enumerate() {
        for col in 0..m {
            a_r[(orig, col)] = reordered.a_r[(pos, col)];
            b_r[(col, orig)] = reordered.b_r[(col, pos)];
        }
        for col in 0..n - m {
            a_s[(orig, col)] = reordered.a_s[(pos, col)];
            b_s[(col, orig)] = reordered.b_s[(col, pos)];
        }
    }
    FastSlowBasis {
        a_r,
        a_s,
        b_r,
        b_s,
        iteration: reordered.iteration,
        curvature: None,
    }
}

/// Partial-equilibrium basis vectors for the form's fast reactions,
/// expressed in the original variable ordering.
pub fn pea_basis(form: &StoichiometricForm, z: &DVector<f64>) -> Result<FastSlowBasis> {
    let m = form.m;
    let n = form.n();
    let s_mm_inv = numerics::invert_with_condition(&form.s_fast_fast(), LAMBDA_COND_MAX)?;
    let a = form.s_slow_fast() * s_mm_inv;
    let (dr_fast, dr_slow) = form.fast_rate_jacobian_blocks(z)?;
    let dr_fast_inv = numerics::invert_with_condition(&dr_fast, LAMBDA_COND_MAX)?;
    let v = dr_fast_inv * dr_slow;
    let y_fast =
        numerics::invert_with_condition(&(DMatrix::identity(m, m) + &v * &a), LAMBDA_COND_MAX)?;
    let y_slow = numerics::invert_with_condition(
        &(DMatrix::identity(n - m, n - m) + &a * &v),
        LAMBDA_COND_MAX,
    )?;

    let mut a_r = DMatrix::zeros(n, m);
    a_r.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    a_r.view_mut((m, 0), (n - m, m)).copy_from(&a);

    let mut a_s_raw = DMatrix::zeros(n, n - m);
    a_s_raw.view_mut((0, 0), (m, n - m)).copy_from(&(-&v));
    a_s_raw
        .view_mut((m, 0), (n - m, n - m))
        .copy_from(&DMatrix::identity(n - m, n - m));
    let a_s = a_s_raw * y_slow;

    let mut b_r_raw = DMatrix::zeros(m, n);
    b_r_raw.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    b_r_raw.view_mut((0, m), (m, n - m)).copy_from(&v);
    let b_r = y_fast * b_r_raw;

    let mut b_s = DMatrix::zeros(n - m, n);
    b_s.view_mut((0, 0), (n - m, m)).copy_from(&(-&a));
    b_s.view_mut((0, m), (n - m, n - m))
        .copy_from(&DMatrix::identity(n - m, n - m));

    Ok(permute_to_original(
        form,
        FastSlowBasis {
            a_r,
            a_s,
            b_r,
            b_s,
            iteration: (0, 0),
            curvature: None,
        },
    ))
}

/// Partial-equilibrium SIM residual
/// `S^M_M R^M + Y (S^M_{K-M} + V S^{N-M}_{K-M}) R^{K-M}`.
pub fn pea_sim_residual(form: &StoichiometricForm, z: &DVector<f64>) -> Result<SimResidual> {
    let m = form.m;
    let rates = form.rates(z)?;
    let r_fast = rates.rows(0, m).into_owned();
    let r_slow = rates.rows(m, form.k() - m).into_owned();
    let (dr_fast, dr_slow) = form.fast_rate_jacobian_blocks(z)?;
    let dr_fast_inv = numerics::invert_with_condition(&dr_fast, LAMBDA_COND_MAX)?;
    let v = dr_fast_inv * dr_slow;
    let y_fast =
        numerics::invert_with_condition(&(DMatrix::identity(m, m) + &v * form.s_slow_fast() * numerics::invert_with_condition(&form.s_fast_fast(), LAMBDA_COND_MAX)?), LAMBDA_COND_MAX)?;
    let amplitude = form.s_fast_fast() * r_fast
        + y_fast * (form.s_fast_slow() + &v * form.s_slow_slow()) * r_slow;
    Ok(SimResidual {
        amplitude,
        provenance: BasisProvenance::Pea,
        point: z.clone(),
    })
}

/// Quasi-steady-state basis vectors for the form's fast variables, in the
/// original variable ordering.
pub fn qssa_basis(form: &StoichiometricForm) -> Result<FastSlowBasis> {
    let m = form.m;
    let n = form.n();
    let s_mm_inv = numerics::invert_with_condition(&form.s_fast_fast(), LAMBDA_COND_MAX)?;
    let a = form.s_slow_fast() * s_mm_inv;

    let mut a_r = DMatrix::zeros(n, m);
    a_r.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    a_r.view_mut((m, 0), (n - m, m)).copy_from(&a);

    let mut a_s = DMatrix::zeros(n, n - m);
    a_s.view_mut((m, 0), (n - m, n - m))
        .copy_from(&DMatrix::identity(n - m, n - m));

    let mut b_r = DMatrix::zeros(m, n);
    b_r.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));

    let mut b_s = DMatrix::zeros(n - m, n);
    b_s.view_mut((0, 0), (n - m, m)).copy_from(&(-&a));
    b_s.view_mut((0, m), (n - m, n - m))
        .copy_from(&DMatrix::identity(n - m, n - m));

    Ok(permute_to_original(
        form,
        FastSlowBasis {
            a_r,
            a_s,
            b_r,
            b_s,
            iteration: (0, 0),
            curvature: None,
        },
    ))
}

/// Quasi-steady-state SIM residual `S^M_M R^M + S^M_{K-M} R^{K-M}`, which
/// reduces to the fast-variable components of `F(z)`.
pub fn qssa_sim_residual(form: &StoichiometricForm, z: &DVector<f64>) -> Result<SimResidual> {
    let m = form.m;
    let rates = form.rates(z)?;
    let r_fast = rates.rows(0, m).into_owned();
    let r_slow = rates.rows(m, form.k() - m).into_owned();
    let amplitude = form.s_fast_fast() * r_fast + form.s_fast_slow() * r_slow;
    Ok(SimResidual {
        amplitude,
        provenance: BasisProvenance::Qssa,
        point: z.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearSystem, MmParams, Model, Preset, WindowSelect};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn eps_abs(n: usize) -> DVector<f64> {
        DVector::from_element(n, 1e-10)
    }

    fn mm1() -> Preset {
        Preset::resolve("mm", "mm1").unwrap()
    }

    fn random_in_omega(preset: &Preset, rng: &mut impl Rng) -> DVector<f64> {
        DVector::from_iterator(
            preset.model.dim(),
            preset
                .omega_for(WindowSelect::All)
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..hi)),
        )
    }

    #[test]
    fn criterion_on_decoupled_linear_system() {
        let sys = LinearSystem::diagonal(&[-100.0, -1.0]);
        // Fast coordinate exhausted: amplitude 1e-11 below threshold.
        let z = DVector::from_vec(vec![1e-13, 0.5]);
        let m = estimate_fast_dimension(&sys, &z, 0.05, &eps_abs(2)).unwrap();
        assert_eq!(m, 1);
        // Fast coordinate active: 50 >= 0.025 + 1e-10.
        let z = DVector::from_vec(vec![0.5, 0.5]);
        let m = estimate_fast_dimension(&sys, &z, 0.05, &eps_abs(2)).unwrap();
        assert_eq!(m, 0);
    }

    #[test]
    fn criterion_never_splits_conjugate_pairs() {
        // Pure rotation: only M = 1 is available and it splits the pair.
        let sys = LinearSystem::new(DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]));
        let z = DVector::from_vec(vec![1e-14, 1e-14]);
        assert_eq!(estimate_fast_dimension(&sys, &z, 0.05, &eps_abs(2)).unwrap(), 0);

        // Fast conjugate block plus a slow real mode: M = 2 is fine.
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-100.0, 10.0, 0.0, -10.0, -100.0, 0.0, 0.0, 0.0, -1.0],
        );
        let sys = LinearSystem::new(a);
        let z = DVector::from_vec(vec![1e-13, 1e-13, 0.5]);
        assert_eq!(estimate_fast_dimension(&sys, &z, 0.05, &eps_abs(3)).unwrap(), 2);
    }

    #[test]
    fn criterion_is_monotone_in_eps_rel() {
        let preset = mm1();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let z = random_in_omega(&preset, &mut rng);
            let mut last = 0;
            for eps_rel in [1e-3, 1e-2, 5e-2, 1e-1, 5e-1] {
                let m =
                    estimate_fast_dimension(&preset.model, &z, eps_rel, &eps_abs(2)).unwrap();
                assert!(m >= last, "M decreased as eps_rel grew");
                last = m;
            }
        }
    }

    #[test]
    fn criterion_rejects_bad_tolerances() {
        let sys = LinearSystem::diagonal(&[-100.0, -1.0]);
        let z = DVector::from_vec(vec![1.0, 1.0]);
        assert!(estimate_fast_dimension(&sys, &z, 0.0, &eps_abs(2)).is_err());
        assert!(estimate_fast_dimension(&sys, &z, 1.5, &eps_abs(2)).is_err());
        assert!(
            estimate_fast_dimension(&sys, &z, 0.05, &DVector::from_vec(vec![1e-10])).is_err()
        );
    }

    #[test]
    fn initial_basis_layouts() {
        // N = 2, fast = {0}.
        let b = csp_initial_basis(2, &[0]).unwrap();
        assert_eq!(b.a_r.as_slice(), &[1.0, 0.0]);
        assert_eq!(b.b_r.as_slice(), &[1.0, 0.0]);
        assert_eq!(b.orthogonality_defect(), 0.0);
        // N = 3, fast = {R} (index 1).
        let b = csp_initial_basis(3, &[1]).unwrap();
        assert_eq!(b.a_r.as_slice(), &[0.0, 1.0, 0.0]);
        // N = 4, fast = {c1, c2} (indices 1, 3).
        let b = csp_initial_basis(4, &[1, 3]).unwrap();
        assert_eq!(b.a_r.column(0).as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(b.a_r.column(1).as_slice(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(b.b_r.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(b.orthogonality_defect(), 0.0);

        assert!(csp_initial_basis(2, &[2]).is_err());
        assert!(csp_initial_basis(2, &[]).is_err());
        assert!(csp_initial_basis(2, &[0, 1]).is_err());
    }

    #[test]
    fn diagonal_system_refinement_is_identity() {
        let sys = LinearSystem::diagonal(&[-100.0, -1.0]);
        let z = DVector::from_vec(vec![0.3, 0.7]);
        let b0 = csp_initial_basis(2, &[0]).unwrap();
        let b1 = csp_refine_br(&sys, &z, &b0, false).unwrap();
        assert_relative_eq!(b1.b_r[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(b1.b_r[(0, 1)], 0.0, epsilon = 1e-14);
        let b2 = csp_refine_ar(&sys, &z, &b1).unwrap();
        assert_relative_eq!(b2.a_r[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(b2.a_r[(1, 0)], 0.0, epsilon = 1e-14);
        assert_eq!(b2.iteration, (1, 1));
        // On the exact SIM (fast coordinate zero) the amplitude vanishes.
        let on_sim = DVector::from_vec(vec![0.0, 0.9]);
        let resid = csp_sim_residual(&sys, &on_sim, &b2).unwrap();
        assert!(resid.amplitude.amax() < 1e-14);
    }

    #[test]
    fn repeated_refinement_converges_to_eigenbasis() {
        // Non-diagonal matrix with strong timescale separation: iterating
        // the plain refinements drives the basis to the eigenvectors.
        let a = DMatrix::from_row_slice(2, 2, &[-100.0, 30.0, 1.0, -1.0]);
        let sys = LinearSystem::new(a.clone());
        let z = DVector::from_vec(vec![0.1, 0.2]);
        let mut basis = csp_initial_basis(2, &[0]).unwrap();
        for _ in 0..5 {
            basis = csp_refine_br(&sys, &z, &basis, false).unwrap();
            basis = csp_refine_ar(&sys, &z, &basis).unwrap();
        }
        let es = eigendecompose(&a).unwrap();
        let v_slow = es.right_vectors.column(1);
        let v_fast = es.right_vectors.column(0);
        let dot_slow: f64 = (0..2).map(|i| basis.b_r[(0, i)] * v_slow[i].re).sum();
        assert!(
            dot_slow.abs() < 1e-10,
            "b_r not orthogonal to slow eigenvector: {dot_slow}"
        );
        // a_r parallel to the fast eigenvector: cross product vanishes.
        let cross = basis.a_r[(0, 0)] * v_fast[1].re - basis.a_r[(1, 0)] * v_fast[0].re;
        assert!(cross.abs() < 1e-10, "a_r not aligned with fast eigenvector");
    }

    #[test]
    fn mm1_csp1_residual_matches_closed_form_c_fast() {
        // Closed form for the one-iteration c-fast approximation, transcribed
        // as printed; it differs from B^r F by a constant factor, so the
        // comparison calibrates one scale on the first point.
        let preset = mm1();
        let Model::Mm(p) = preset.model.clone() else { unreachable!() };
        let closed = |s: f64, c: f64| -> f64 {
            p.k1b * c + p.k2 * c - (p.e0 - c) * p.k1f * s
                + (p.e0 - c) * p.k1f * (c * p.k1b - (p.e0 - c) * p.k1f * s)
                    / (p.k1b + p.k2 + p.k1f * s)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut scale: Option<f64> = None;
        for _ in 0..200 {
            let z = random_in_omega(&preset, &mut rng);
            let numeric = csp_residual_after(&preset.model, &z, &[1], 1).unwrap()[0];
            let expected = closed(z[0], z[1]);
            let kappa = *scale.get_or_insert(expected / numeric);
            assert_relative_eq!(numeric * kappa, expected, max_relative = 1e-10);
        }
        // The calibration is a pure sign flip.
        assert_relative_eq!(scale.unwrap().abs(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn mm1_csp1_residual_matches_closed_form_s_fast() {
        let preset = mm1();
        let Model::Mm(p) = preset.model.clone() else { unreachable!() };
        let closed = |s: f64, c: f64| -> f64 {
            p.k1b * c - p.k1f * (p.e0 - c) * s
                + (p.k1b + p.k1f * s) * (c * (p.k1b + p.k2 + p.k1f * s) - p.e0 * p.k1f * s)
                    / (p.k1f * (p.e0 - c))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let z = random_in_omega(&preset, &mut rng);
            let numeric = csp_residual_after(&preset.model, &z, &[0], 1).unwrap()[0];
            let expected = closed(z[0], z[1]);
            assert_relative_eq!(numeric, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn orthogonality_preserved_through_both_iterations() {
        let preset = mm1();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let z = random_in_omega(&preset, &mut rng);
            for fast in [[0usize], [1usize]] {
                let b0 = csp_initial_basis(2, &fast).unwrap();
                let b1 = csp_refine_br(&preset.model, &z, &b0, false).unwrap();
                assert!(b1.orthogonality_defect() < 1e-10);
                let b2 = csp_refine_ar(&preset.model, &z, &b1).unwrap();
                assert!(b2.orthogonality_defect() < 1e-10);
                let b3 = csp_refine_br(&preset.model, &z, &b2, true).unwrap();
                assert!(b3.orthogonality_defect() < 1e-10);
                assert_eq!(b3.iteration, (2, 1));
            }
        }
    }

    #[test]
    fn refined_fast_vector_aligns_with_fast_eigenvector_on_sim() {
        let preset = mm1();
        let Model::Mm(p) = preset.model.clone() else { unreachable!() };
        // Points on the standard QSSA curve are essentially on the SIM.
        for s in [0.01, 0.5, 2.0, 30.0, 500.0] {
            let c = p.k1f * p.e0 * s / (p.k2 + p.k1b + p.k1f * s);
            let z = DVector::from_vec(vec![s, c]);
            let basis = csp_basis_after(&preset.model, &z, &[1], 1).unwrap();
            let es = eigendecompose(&preset.model.jacobian(&z).unwrap()).unwrap();
            let proj_fast: f64 = (0..2)
                .map(|i| es.left_vectors[(0, i)].re * basis.a_r[(i, 0)])
                .sum();
            let proj_slow: f64 = (0..2)
                .map(|i| es.left_vectors[(1, i)].re * basis.a_r[(i, 0)])
                .sum();
            assert!(
                (proj_slow / proj_fast).abs() < 0.05,
                "slow contamination {} at s = {s}",
                proj_slow / proj_fast
            );
        }
    }

    #[test]
    fn curvature_refinement_requires_history() {
        let preset = mm1();
        let z = DVector::from_vec(vec![1.0, 0.005]);
        let b0 = csp_initial_basis(2, &[1]).unwrap();
        assert!(csp_refine_br(&preset.model, &z, &b0, true).is_err());
    }

    #[test]
    fn degenerate_lambda_is_reported() {
        // Jacobian of the nilpotent system is singular in the fast block.
        let sys = LinearSystem::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let z = DVector::from_vec(vec![1.0, 1.0]);
        let b0 = csp_initial_basis(2, &[0]).unwrap();
        assert!(matches!(
            csp_refine_br(&sys, &z, &b0, false),
            Err(SlimError::Degenerate(_))
        ));
    }

    #[test]
    fn qssa_residual_is_fast_component_of_vector_field() {
        let preset = mm1();
        let form = preset.model.stoichiometric_form(&[1], &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let z = random_in_omega(&preset, &mut rng);
            let resid = qssa_sim_residual(&form, &z).unwrap();
            let f = preset.model.vector_field(&z).unwrap();
            assert_relative_eq!(resid.amplitude[0], f[1], max_relative = 1e-14);
        }
        let basis = qssa_basis(&form).unwrap();
        assert!(basis.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn qssa_vanishes_on_standard_qssa_curve() {
        let preset = mm1();
        let Model::Mm(p) = preset.model.clone() else { unreachable!() };
        let form = preset.model.stoichiometric_form(&[1], &[0]).unwrap();
        for s in [1e-3, 0.1, 1.0, 10.0, 999.0] {
            let c = p.k1f * p.e0 * s / (p.k2 + p.k1b + p.k1f * s);
            let z = DVector::from_vec(vec![s, c]);
            let resid = qssa_sim_residual(&form, &z).unwrap();
            assert!(resid.amplitude.amax() < 1e-12);
        }
    }

    #[test]
    fn mm_pea_residual_matches_closed_form() {
        // Partial equilibrium of the binding reaction; printed form differs
        // from the block formula by the constant -1/k1f.
        let preset = mm1();
        let Model::Mm(p) = preset.model.clone() else { unreachable!() };
        let closed = |s: f64, c: f64| -> f64 {
            let kb = p.k1b / p.k1f;
            (p.e0 - c) * s - kb * c - (kb + s) / (kb + s + p.e0 - c) * p.k2 * c / p.k1f
        };
        let form = preset.model.stoichiometric_form(&[0], &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut scale: Option<f64> = None;
        for _ in 0..200 {
            let z = random_in_omega(&preset, &mut rng);
            let numeric = pea_sim_residual(&form, &z).unwrap().amplitude[0];
            let expected = closed(z[0], z[1]);
            let kappa = *scale.get_or_insert(expected / numeric);
            assert_relative_eq!(numeric * kappa, expected, max_relative = 1e-9);
        }
        assert_relative_eq!(scale.unwrap(), -1.0 / p.k1f, max_relative = 1e-12);
    }

    #[test]
    fn pea_basis_satisfies_orthogonality() {
        let preset = mm1();
        let form = preset.model.stoichiometric_form(&[0], &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let z = random_in_omega(&preset, &mut rng);
            let basis = pea_basis(&form, &z).unwrap();
            assert!(basis.orthogonality_defect() < 1e-10);
            // PEA amplitude equals B^r F for the same basis.
            let block = pea_sim_residual(&form, &z).unwrap().amplitude;
            let brf = &basis.b_r * preset.model.vector_field(&z).unwrap();
            assert_relative_eq!(block[0], brf[0], max_relative = 1e-9);
        }
    }

    #[test]
    fn tmdd_pea_residual_invariant_to_fast_variable_choice() {
        let preset = Preset::resolve("tmdd", "tmdd-default").unwrap();
        let form_l = preset.model.stoichiometric_form(&[0], &[0]).unwrap();
        let form_r = preset.model.stoichiometric_form(&[1], &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ratio: Option<f64> = None;
        for _ in 0..200 {
            let z = DVector::from_vec(vec![
                rng.random_range(1.0..100.0),
                rng.random_range(0.01..10.0),
                rng.random_range(1.0..30.0),
            ]);
            let rl = pea_sim_residual(&form_l, &z).unwrap().amplitude[0];
            let rr = pea_sim_residual(&form_r, &z).unwrap().amplitude[0];
            let k = *ratio.get_or_insert(rl / rr);
            assert_relative_eq!(rl, k * rr, max_relative = 1e-9);
        }
    }

    #[test]
    fn mm1_trajectory_shows_transient_then_on_sim_window() {
        let preset = mm1();
        let z0 = DVector::from_vec(vec![1000.0, 0.5]);
        let traj =
            crate::integrator::integrate(&preset.model, &z0, preset.t_end, 1e-8, 1e-10).unwrap();
        let eps = eps_abs(2);
        let ms: Vec<usize> = traj
            .states
            .iter()
            .map(|z| estimate_fast_dimension(&preset.model, z, 0.05, &eps).unwrap())
            .collect();
        assert_eq!(ms[0], 0, "transient should start with M = 0");
        let first_on = ms.iter().position(|&m| m == 1).expect("no M = 1 window");
        assert!(
            ms[first_on..].iter().all(|&m| m == 1),
            "M should stay 1 after the transient"
        );
    }

    #[test]
    fn mm_qssa_with_wrong_fast_variable_is_rqssa() {
        let p = MmParams {
            k1f: 1.0,
            k1b: 1.0,
            k2: 1e-2,
            e0: 1e2,
        };
        let model = Model::Mm(p);
        let form = model.stoichiometric_form(&[0], &[0]).unwrap();
        let z = DVector::from_vec(vec![0.4, 20.0]);
        let resid = qssa_sim_residual(&form, &z).unwrap();
        // rQSSA: k1f (e0 - c) s - k1b c = F_s with flipped sign.
        let expected = -(p.k1f * (p.e0 - z[1]) * z[0] - p.k1b * z[1]);
        assert_relative_eq!(resid.amplitude[0], expected, max_relative = 1e-14);
    }
}
