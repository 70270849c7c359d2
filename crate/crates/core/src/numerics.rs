//! Dense linear-algebra kernels shared by every other module: nonsymmetric
//! eigendecomposition with left/right eigenvectors, and pivoted linear solves
//! backing the Levenberg-Marquardt and Newton iterations.
//!
//! Benchmark systems have `N <= 4`, so everything here is dense and direct.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Result, SlimError};

/// Relative pivot threshold below which a factorization is treated as
/// rank-deficient.
const PIVOT_RTOL: f64 = 1e-14;

type C64 = Complex<f64>;
type CMatrix = DMatrix<C64>;
type CVector = DVector<C64>;

/// Eigendecomposition of a real square matrix.
///
/// Eigenvalues are sorted by descending modulus (ties broken by descending
/// real part) and complex-conjugate pairs are kept adjacent. Right
/// eigenvectors are the columns of `right_vectors`; left eigenvectors are the
/// rows of `left_vectors`, normalized so that `u^i . v_j = delta_ij`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<C64>,
    pub right_vectors: CMatrix,
    pub left_vectors: CMatrix,
    /// Permutation mapping sorted position -> position in the unsorted
    /// spectrum returned by the QR iteration.
    pub ordering: Vec<usize>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Spectral projector `v_m u^m` onto the m-th eigendirection.
    pub fn projector(&self, m: usize) -> CMatrix {
        let v = self.right_vectors.column(m);
        let u = self.left_vectors.row(m);
        v * u
    }

    /// Reconstructs the original matrix as `sum_j lambda_j v_j u^j`,
    /// discarding the (tiny) imaginary residue.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut acc = CMatrix::zeros(n, n);
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            acc += self.projector(j) * *lambda;
        }
        acc.map(|c| c.re)
    }
}

fn check_square_finite(a: &DMatrix<f64>) -> Result<usize> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(SlimError::InvalidInput(format!(
            "expected a nonempty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(SlimError::InvalidInput(
            "matrix has non-finite entries".into(),
        ));
    }
    Ok(n)
}

/// Fixes the phase of a complex vector so the entry of largest modulus is
/// real and positive. Keeps eigenvectors deterministic across runs and makes
/// conjugate pairing exact.
fn normalize_phase(v: &mut CVector) {
    let mut best = 0usize;
    let mut best_norm = 0.0;
    for (k, c) in v.iter().enumerate() {
        let m = c.norm_sqr();
        if m > best_norm {
            best_norm = m;
            best = k;
        }
    }
    let pivot = v[best];
    let scale = pivot.norm();
    if scale > 0.0 {
        let phase = pivot / C64::new(scale, 0.0);
        for c in v.iter_mut() {
            *c /= phase;
        }
    }
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for c in v.iter_mut() {
            *c /= C64::new(norm, 0.0);
        }
    }
}

/// Inverse iteration for the eigenvector of `a` belonging to `lambda`.
///
/// `deflate` holds previously computed eigenvectors of (numerically) the same
/// eigenvalue; the iterate is kept orthogonal to them so repeated eigenvalues
/// yield independent vectors.
fn inverse_iteration(
    a: &CMatrix,
    lambda: C64,
    start: &CVector,
    deflate: &[CVector],
    scale: f64,
) -> Result<CVector> {
    let n = a.nrows();
    let orthogonalize = |v: &mut CVector| {
        for w in deflate {
            let proj: C64 = w.iter().zip(v.iter()).map(|(wi, vi)| wi.conj() * *vi).sum();
            for k in 0..n {
                v[k] -= proj * w[k];
            }
        }
    };

    let mut shift_bump = 0.0;
    for _attempt in 0..6 {
        let mut b = a.clone();
        let mu = lambda + C64::new(shift_bump, 0.0);
        for k in 0..n {
            b[(k, k)] -= mu;
        }
        let lu = b.lu();
        // Singular to working precision: nudge the shift off the spectrum.
        let u_diag_min = (0..n).map(|k| lu.u()[(k, k)].norm()).fold(f64::INFINITY, f64::min);
        if u_diag_min <= PIVOT_RTOL * scale {
            shift_bump = if shift_bump == 0.0 {
                1e-12 * scale.max(1.0)
            } else {
                shift_bump * 100.0
            };
            continue;
        }
        let mut x = start.clone();
        orthogonalize(&mut x);
        if x.norm() < 1e-8 {
            x = start.clone();
        }
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(mut y) => {
                    orthogonalize(&mut y);
                    normalize_phase(&mut y);
                    if y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                        ok = false;
                        break;
                    }
                    x = y;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        shift_bump = if shift_bump == 0.0 {
            1e-12 * scale.max(1.0)
        } else {
            shift_bump * 100.0
        };
    }
    Err(SlimError::Numerical(format!(
        "inverse iteration failed for eigenvalue {lambda}"
    )))
}

/// Full eigendecomposition with left and right eigenvectors.
///
/// Eigenvalues come from the real Schur form; eigenvectors from shifted
/// inverse iteration; left eigenvectors from the inverse of the
/// right-eigenvector matrix, which enforces biorthonormality directly.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<EigenSystem> {
    let n = check_square_finite(a)?;
    let scale = a.amax().max(1.0);

    let eigvals = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| {
            SlimError::Numerical(format!("Schur iteration did not converge for {a}"))
        })?
        .complex_eigenvalues();

    // Sort indices by descending modulus, ties by descending real part, then
    // positive imaginary part first so conjugate pairs sit adjacently.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (li, lj) = (eigvals[i], eigvals[j]);
        lj.norm()
            .partial_cmp(&li.norm())
            .unwrap()
            .then(lj.re.partial_cmp(&li.re).unwrap())
            .then(lj.im.partial_cmp(&li.im).unwrap())
    });
    let sorted: Vec<C64> = order.iter().map(|&i| eigvals[i]).collect();

    let ac = a.map(|x| C64::new(x, 0.0));
    // Dense deterministic start vector with no zero components.
    let base_start = CVector::from_iterator(
        n,
        (0..n).map(|k| C64::new(1.0 + 0.5 * (k as f64) / (n as f64), 0.0)),
    );

    let mut right = CMatrix::zeros(n, n);
    let mut j = 0usize;
    while j < n {
        let lambda = sorted[j];
        // Conjugate partner: reuse the conjugate of the vector just computed.
        if j > 0 && lambda.im < 0.0 && (sorted[j - 1].conj() - lambda).norm() <= 1e-12 * scale {
            let prev = right.column(j - 1).map(|c| c.conj());
            right.set_column(j, &prev);
            j += 1;
            continue;
        }
        // Collect already-computed vectors of numerically equal eigenvalues
        // so repeated roots get independent directions.
        let deflate: Vec<CVector> = (0..j)
            .filter(|&k| (sorted[k] - lambda).norm() <= 1e-10 * scale)
            .map(|k| right.column(k).into_owned())
            .collect();
        let mut start = base_start.clone();
        if !deflate.is_empty() {
            // Shift the start so deflated restarts do not collapse.
            start[j % n] += C64::new(1.0 + j as f64, 0.0);
        }
        let v = inverse_iteration(&ac, lambda, &start, &deflate, scale)?;
        right.set_column(j, &v);
        j += 1;
    }

    let left = right.clone().try_inverse().ok_or_else(|| {
        SlimError::Numerical("right-eigenvector matrix is singular (defective matrix?)".into())
    })?;
    // Row-normalize so u^j . v_j = 1 exactly.
    let mut left = left;
    for k in 0..n {
        let d: C64 = (left.row(k) * right.column(k))[(0, 0)];
        if d.norm() == 0.0 {
            return Err(SlimError::Numerical(
                "degenerate left/right eigenvector pairing".into(),
            ));
        }
        let row = left.row(k) / d;
        left.set_row(k, &row);
    }

    Ok(EigenSystem {
        eigenvalues: sorted,
        right_vectors: right,
        left_vectors: left,
        ordering: order,
    })
}

/// Solves `A x = b` with a pivoted LU factorization.
///
/// Rejects systems whose U factor has a pivot below `PIVOT_RTOL` of the
/// largest pivot; LM and Newton callers respond by increasing damping.
pub fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = check_square_finite(a)?;
    if b.len() != n {
        return Err(SlimError::InvalidInput(format!(
            "rhs length {} does not match matrix dimension {n}",
            b.len()
        )));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
    for k in 0..n {
        let p = u[(k, k)].abs();
        pmin = pmin.min(p);
        pmax = pmax.max(p);
    }
    if pmin <= PIVOT_RTOL * pmax.max(1e-300) {
        return Err(SlimError::RankDeficient(format!(
            "pivot ratio {:.3e}",
            pmin / pmax.max(1e-300)
        )));
    }
    lu.solve(b)
        .ok_or_else(|| SlimError::RankDeficient("LU solve failed".into()))
}

/// Inverts a small dense matrix, rejecting condition numbers above `cond_max`
/// (1-norm estimate from the explicit inverse).
pub fn invert_with_condition(a: &DMatrix<f64>, cond_max: f64) -> Result<DMatrix<f64>> {
    let _ = check_square_finite(a)?;
    let norm_a = one_norm(a);
    let inv = a.clone().try_inverse().ok_or_else(|| {
        SlimError::Degenerate("singular fast-subspace block".into())
    })?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(SlimError::Degenerate("non-finite inverse".into()));
    }
    let cond = norm_a * one_norm(&inv);
    if cond > cond_max {
        return Err(SlimError::Degenerate(format!(
            "condition estimate {cond:.3e} exceeds {cond_max:.1e}"
        )));
    }
    Ok(inv)
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Takes the real part of a complex scalar, erroring when the imaginary
/// residue exceeds `1e-10 * scale`.
pub fn real_part_checked(c: C64, scale: f64) -> Result<f64> {
    if c.im.abs() > 1e-10 * scale.max(1.0) {
        return Err(SlimError::Numerical(format!(
            "imaginary residue {:.3e} too large for a real quantity",
            c.im
        )));
    }
    Ok(c.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn diagonal_matrix_gives_coordinate_eigenvectors() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-100.0, -1.0]));
        let es = eigendecompose(&a).unwrap();
        assert_relative_eq!(es.eigenvalues[0].re, -100.0, max_relative = 1e-12);
        assert_relative_eq!(es.eigenvalues[1].re, -1.0, max_relative = 1e-12);
        for j in 0..2 {
            for i in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(es.right_vectors[(i, j)].re, expect, epsilon = 1e-12);
                assert_relative_eq!(es.left_vectors[(j, i)].re, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identity_accepts_any_biorthonormal_pair() {
        let a = DMatrix::<f64>::identity(2, 2);
        let es = eigendecompose(&a).unwrap();
        for lambda in &es.eigenvalues {
            assert_relative_eq!(lambda.re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(lambda.im, 0.0, epsilon = 1e-12);
        }
        // Biorthonormality is the contract; the particular pair is free.
        let prod = &es.left_vectors * &es.right_vectors;
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(prod[(i, j)].re, expect, epsilon = 1e-10);
                assert_relative_eq!(prod[(i, j)].im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mm1_origin_jacobian_spectrum_matches_quadratic_formula() {
        // Characteristic polynomial lambda^2 + 102 lambda + 1 = 0 solved as
        // the oracle for J = [[-1, 100], [1, -101]].
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 100.0, 1.0, -101.0]);
        let disc = (102.0f64 * 102.0 - 4.0).sqrt();
        let expect_fast = (-102.0 - disc) / 2.0;
        let expect_slow = (-102.0 + disc) / 2.0;
        let es = eigendecompose(&a).unwrap();
        assert_relative_eq!(es.eigenvalues[0].re, expect_fast, max_relative = 1e-12);
        assert_relative_eq!(es.eigenvalues[1].re, expect_slow, max_relative = 1e-9);
        assert!(es.eigenvalues[0].norm() > es.eigenvalues[1].norm());
    }

    #[test]
    fn reconstruction_and_biorthonormality_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let a = random_matrix(4, &mut rng);
            let es = eigendecompose(&a).unwrap();
            let norm_a = a.norm();
            assert!(
                (a.clone() - es.reconstruct()).norm() <= 1e-8 * norm_a,
                "reconstruction failed for {a}"
            );
            let prod = &es.left_vectors * &es.right_vectors;
            for i in 0..4 {
                for j in 0..4 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (prod[(i, j)] - C64::new(expect, 0.0)).norm() <= 1e-10,
                        "biorthonormality failed at ({i},{j}): {}",
                        prod[(i, j)]
                    );
                }
            }
            // Descending modulus with conjugates adjacent.
            for k in 1..4 {
                assert!(es.eigenvalues[k - 1].norm() >= es.eigenvalues[k].norm() - 1e-12);
            }
            for k in 0..4 {
                let l = es.eigenvalues[k];
                if l.im > 0.0 {
                    assert!(
                        (es.eigenvalues[k + 1] - l.conj()).norm() <= 1e-9 * l.norm(),
                        "conjugate not adjacent"
                    );
                }
            }
        }
    }

    #[test]
    fn complex_spectrum_rotation_block() {
        // [[0, -2], [2, 0]] has eigenvalues +/- 2i.
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let es = eigendecompose(&a).unwrap();
        assert_relative_eq!(es.eigenvalues[0].im, 2.0, max_relative = 1e-10);
        assert_relative_eq!(es.eigenvalues[1].im, -2.0, max_relative = 1e-10);
        assert!((a.clone() - es.reconstruct()).norm() <= 1e-9 * a.norm());
    }

    #[test]
    fn rejects_non_finite_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(
            eigendecompose(&a),
            Err(SlimError::InvalidInput(_))
        ));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let a = DMatrix::<f64>::identity(2, 2);
        let x = solve_linear(&a, &DVector::from_vec(vec![3.0, 4.0])).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 4.0]);

        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let x = solve_linear(&a, &DVector::from_vec(vec![2.0, 8.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn solve_rejects_singular_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            solve_linear(&a, &b),
            Err(SlimError::RankDeficient(_))
        ));
    }

    #[test]
    fn solve_round_trip_on_random_well_conditioned_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut a = random_matrix(4, &mut rng);
            // Diagonal dominance keeps the systems well conditioned.
            for k in 0..4 {
                a[(k, k)] += 8.0;
            }
            let b = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let x = solve_linear(&a, &b).unwrap();
            let resid = (&a * &x - &b).norm();
            assert!(resid <= 1e-10 * (a.norm() * x.norm() + b.norm()));
        }
    }

    #[test]
    fn condition_guard_trips_on_near_singular_block() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(matches!(
            invert_with_condition(&a, 1e12),
            Err(SlimError::Degenerate(_))
        ));
        let ok = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(invert_with_condition(&ok, 1e12).is_ok());
    }
}
