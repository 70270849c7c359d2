//! Stiff initial-value solver producing the trajectories that collocation
//! and test points are sampled from.
//!
//! The method is the three-stage, stiffly accurate, L-stable SDIRK scheme of
//! order 3 with an embedded order-2 weight vector for error control. Stage
//! equations are solved by a modified Newton iteration on the analytic
//! Jacobian; the embedded error is filtered through `(I - h*gamma*J)^-1`
//! before the step-size controller sees it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SlimError};
use crate::models::Dynamics;

/// Diagonal coefficient: the root of `x^3 - 3x^2 + 3x/2 - 1/6` in (1/6, 1/2).
const GAMMA: f64 = 0.435_866_521_508_459;

const MAX_STEPS: usize = 5_000_000;
const MAX_NEWTON_ITERS: usize = 12;
const SAFETY: f64 = 0.9;
const GROW_LIMIT: f64 = 5.0;
const SHRINK_LIMIT: f64 = 0.1;

/// Adaptive-step solution of an IVP with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model_id: String,
    pub initial: DVector<f64>,
    /// Accepted step times, strictly increasing, starting at 0.
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Vector field at each accepted state, used by the Hermite interpolant.
    pub derivs: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Dense output: cubic Hermite interpolation on `(t, z, F(z))` between
    /// the accepted steps enclosing `t`.
    pub fn sample_at(&self, t: f64) -> Result<DVector<f64>> {
        let (t0, t1) = (self.times[0], self.t_end());
        if t < t0 || t > t1 {
            return Err(SlimError::InvalidInput(format!(
                "t = {t} outside trajectory span [{t0}, {t1}]"
            )));
        }
        // Index of the left node of the bracketing interval.
        let idx = match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(exact) => return Ok(self.states[exact].clone()),
            Err(right) => right - 1,
        };
        let h = self.times[idx + 1] - self.times[idx];
        let theta = (t - self.times[idx]) / h;
        let (y0, y1) = (&self.states[idx], &self.states[idx + 1]);
        let (f0, f1) = (&self.derivs[idx], &self.derivs[idx + 1]);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + theta;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(y0 * h00 + f0 * (h10 * h) + y1 * h01 + f1 * (h11 * h))
    }

    /// Serializes as CSV with header `t,<var1>,...,<varN>`.
    pub fn write_csv<W: std::io::Write>(&self, names: &[&str], w: &mut W) -> std::io::Result<()> {
        write!(w, "t")?;
        for name in names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for (t, z) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in z.iter() {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `count` states at uniform time spacing over `[t_start, t_stop]`, taken
/// from the trajectory's interpolant.
pub fn sample_equidistant(
    traj: &Trajectory,
    t_start: f64,
    t_stop: f64,
    count: usize,
) -> Result<Vec<(f64, DVector<f64>)>> {
    if count < 2 {
        return Err(SlimError::InvalidInput(format!(
            "need at least 2 sample points, got {count}"
        )));
    }
    if !(t_stop > t_start) {
        return Err(SlimError::InvalidInput(format!(
            "degenerate sampling interval [{t_start}, {t_stop}]"
        )));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let t = t_start + (t_stop - t_start) * (i as f64) / ((count - 1) as f64);
        // Clamp the last node against floating-point overshoot.
        let t = t.min(traj.t_end());
        out.push((t, traj.sample_at(t)?));
    }
    Ok(out)
}

struct StepWorkspace {
    /// LU of `I - h*gamma*J` shared by all stages of the step.
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

fn factor(system: &impl Dynamics, y: &DVector<f64>, h: f64) -> Result<StepWorkspace> {
    let n = y.len();
    let j = system.jac(y)?;
    let mut m = DMatrix::identity(n, n);
    m -= j * (h * GAMMA);
    Ok(StepWorkspace { lu: m.lu() })
}

/// Weighted RMS norm with per-component weights `atol + rtol * |y_ref|`.
fn wrms(v: &DVector<f64>, y_ref: &DVector<f64>, rel_tol: f64, abs_tol: f64) -> f64 {
    let n = v.len() as f64;
    (v.iter()
        .zip(y_ref.iter())
        .map(|(e, y)| {
            let w = abs_tol + rel_tol * y.abs();
            (e / w) * (e / w)
        })
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Solves one implicit stage `Y = rhs + h*gamma*F(Y)` by modified Newton.
fn solve_stage(
    system: &impl Dynamics,
    ws: &StepWorkspace,
    rhs: &DVector<f64>,
    guess: &DVector<f64>,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Option<DVector<f64>> {
    let mut y = guess.clone();
    for _ in 0..MAX_NEWTON_ITERS {
        let f = system.f(&y).ok()?;
        let residual = rhs + &f * (h * GAMMA) - &y;
        let delta = ws.lu.solve(&residual)?;
        y += &delta;
        if y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if wrms(&delta, &y, rel_tol, abs_tol) < 0.03 {
            return Some(y);
        }
    }
    None
}

/// Integrates `dz/dt = F(z)` from `z0` to `t_end` with adaptive steps.
pub fn integrate(
    system: &impl Dynamics,
    z0: &DVector<f64>,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory> {
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(SlimError::InvalidInput("non-finite initial state".into()));
    }
    if z0.len() != system.dim() {
        return Err(SlimError::InvalidInput(format!(
            "initial state length {} does not match system dimension {}",
            z0.len(),
            system.dim()
        )));
    }
    if !(t_end > 0.0) || !(rel_tol > 0.0) || !(abs_tol > 0.0) {
        return Err(SlimError::InvalidInput(
            "t_end and tolerances must be positive".into(),
        ));
    }

    // Butcher tableau (stiffly accurate, last row equals b).
    let a21 = (1.0 - GAMMA) / 2.0;
    let b1 = -(6.0 * GAMMA * GAMMA - 16.0 * GAMMA + 1.0) / 4.0;
    let b2 = (6.0 * GAMMA * GAMMA - 20.0 * GAMMA + 5.0) / 4.0;
    // Embedded order-2 weights (third stage unused).
    let e1 = GAMMA / (1.0 - GAMMA);
    let e2 = 1.0 - e1;

    let mut t = 0.0;
    let mut y = z0.clone();
    let mut f_y = system.f(&y)?;
    let mut h = (1e-4 * t_end).min(1.0).max(1e-10);

    let mut traj = Trajectory {
        model_id: system.id().to_string(),
        initial: z0.clone(),
        times: vec![0.0],
        states: vec![y.clone()],
        derivs: vec![f_y.clone()],
    };

    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(SlimError::Integration {
                t,
                message: format!("exceeded {MAX_STEPS} steps"),
            });
        }
        h = h.min(t_end - t);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(SlimError::Integration {
                t,
                message: "step-size underflow (stiffness failure)".into(),
            });
        }

        let ws = match factor(system, &y, h) {
            Ok(ws) => ws,
            Err(_) => {
                h *= 0.5;
                continue;
            }
        };

        // Stage 1.
        let rhs1 = y.clone();
        let Some(y1) = solve_stage(system, &ws, &rhs1, &(&y + &f_y * (GAMMA * h)), h, rel_tol, abs_tol)
        else {
            h *= 0.25;
            continue;
        };
        let k1 = (&y1 - &rhs1) / (h * GAMMA);
        // Stage 2.
        let rhs2 = &y + &k1 * (a21 * h);
        let Some(y2) = solve_stage(system, &ws, &rhs2, &y1, h, rel_tol, abs_tol) else {
            h *= 0.25;
            continue;
        };
        let k2 = (&y2 - &rhs2) / (h * GAMMA);
        // Stage 3 lands on the step endpoint.
        let rhs3 = &y + (&k1 * b1 + &k2 * b2) * h;
        let Some(y3) = solve_stage(system, &ws, &rhs3, &y2, h, rel_tol, abs_tol) else {
            h *= 0.25;
            continue;
        };
        let k3 = (&y3 - &rhs3) / (h * GAMMA);

        if y3.iter().any(|v| !v.is_finite() || v.abs() > 1e150) {
            return Err(SlimError::Integration {
                t,
                message: "solution diverged".into(),
            });
        }

        // Embedded error, filtered for stiffness.
        let err_raw = (&k1 * (b1 - e1) + &k2 * (b2 - e2) + &k3 * GAMMA) * h;
        let err = ws.lu.solve(&err_raw).unwrap_or(err_raw);
        let mut y_scale = y.clone();
        for i in 0..y_scale.len() {
            y_scale[i] = y_scale[i].abs().max(y3[i].abs());
        }
        let err_norm = wrms(&err, &y_scale, rel_tol, abs_tol);

        if err_norm <= 1.0 {
            t += h;
            y = y3;
            f_y = k3; // stiffly accurate: k3 = F(y_{n+1})
            traj.times.push(t);
            traj.states.push(y.clone());
            traj.derivs.push(f_y.clone());
        }
        let factor = SAFETY * err_norm.max(1e-10).powf(-1.0 / 3.0);
        h *= factor.clamp(SHRINK_LIMIT, GROW_LIMIT);
    }

    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LinearSystem, Model, Preset};
    use approx::assert_relative_eq;

    #[test]
    fn scalar_exponential_decay() {
        let sys = LinearSystem::diagonal(&[-1.0]);
        let traj = integrate(&sys, &DVector::from_vec(vec![1.0]), 1.0, 1e-8, 1e-10).unwrap();
        let z1 = traj.states.last().unwrap()[0];
        assert_relative_eq!(z1, (-1.0f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn dense_output_matches_exponential() {
        let sys = LinearSystem::diagonal(&[-2.0]);
        let traj = integrate(&sys, &DVector::from_vec(vec![1.0]), 2.0, 1e-9, 1e-11).unwrap();
        for &t in &[0.0, 0.31, 0.5, 0.77, 1.33, 1.999, 2.0] {
            let z = traj.sample_at(t).unwrap()[0];
            assert_relative_eq!(z, (-2.0 * t).exp(), epsilon = 1e-7, max_relative = 1e-6);
        }
    }

    #[test]
    fn equidistant_sampling_endpoints_and_spacing() {
        let sys = LinearSystem::diagonal(&[-1.0]);
        let traj = integrate(&sys, &DVector::from_vec(vec![1.0]), 1.0, 1e-8, 1e-10).unwrap();
        let pts = sample_equidistant(&traj, 0.0, 1.0, 3).unwrap();
        let ts: Vec<f64> = pts.iter().map(|(t, _)| *t).collect();
        assert_eq!(ts, vec![0.0, 0.5, 1.0]);

        assert!(sample_equidistant(&traj, 0.3, 0.3, 5).is_err());
        assert!(sample_equidistant(&traj, 0.0, 1.0, 1).is_err());
        assert!(sample_equidistant(&traj, -0.5, 1.0, 5).is_err());
    }

    #[test]
    fn mm1_reaches_fixed_point_without_step_underflow() {
        // Timescale ratio ~1e4: exercises the stiff path.
        let preset = Preset::resolve("mm", "mm1").unwrap();
        let z0 = DVector::from_vec(vec![1000.0, 0.5]);
        let traj = integrate(&preset.model, &z0, preset.t_end, 1e-8, 1e-10).unwrap();
        let zf = traj.states.last().unwrap();
        assert!(zf[0].abs() < 2e-3, "s(t_end) = {}", zf[0]);
        assert!(zf[1].abs() < 1e-4, "c(t_end) = {}", zf[1]);
        // Enzyme conservation: c < e0 along the whole trajectory.
        assert!(traj.states.iter().all(|z| z[1] < 1.0));
        // Late-time complex sits on the standard QSSA curve.
        let Model::Mm(p) = &preset.model else { unreachable!() };
        let mid = traj.sample_at(preset.t_end / 2.0).unwrap();
        let (s, c) = (mid[0], mid[1]);
        let c_qssa = p.k1f * p.e0 * s / (p.k2 + p.k1b + p.k1f * s);
        assert!((c - c_qssa).abs() < 1e-6, "c = {c}, sQSSA = {c_qssa}");
    }

    #[test]
    fn tmdd_approaches_equilibrium() {
        let preset = Preset::resolve("tmdd", "tmdd-default").unwrap();
        let Model::Tmdd(p) = &preset.model else { unreachable!() };
        let r_star = p.receptor_equilibrium();
        let z0 = DVector::from_vec(vec![100.0, r_star, 0.0]);
        let traj = integrate(&preset.model, &z0, 20_000.0, 1e-8, 1e-10).unwrap();
        let zf = traj.states.last().unwrap();
        assert!(zf[0].abs() < 1e-6);
        assert_relative_eq!(zf[1], r_star, max_relative = 1e-3);
        assert!(zf[2].abs() < 1e-3);
    }

    #[test]
    fn self_convergence_under_tolerance_halving() {
        let preset = Preset::resolve("mm", "mm1").unwrap();
        let z0 = DVector::from_vec(vec![1000.0, 0.5]);
        let coarse = integrate(&preset.model, &z0, 100.0, 1e-6, 1e-8).unwrap();
        let fine = integrate(&preset.model, &z0, 100.0, 5e-7, 5e-9).unwrap();
        let zc = coarse.states.last().unwrap();
        let zf = fine.states.last().unwrap();
        let diff = (zc - zf).amax();
        let scale = zf.amax();
        assert!(diff <= 1e-6 * scale.max(1.0), "diff = {diff:.3e}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = LinearSystem::diagonal(&[-1.0]);
        let z0 = DVector::from_vec(vec![1.0]);
        assert!(integrate(&sys, &z0, -1.0, 1e-8, 1e-10).is_err());
        assert!(integrate(&sys, &z0, 1.0, 0.0, 1e-10).is_err());
        assert!(integrate(&sys, &DVector::from_vec(vec![f64::NAN]), 1.0, 1e-8, 1e-10).is_err());
        assert!(integrate(&sys, &DVector::from_vec(vec![1.0, 2.0]), 1.0, 1e-8, 1e-10).is_err());
    }

    #[test]
    fn trajectory_csv_round_trip_shape() {
        let sys = LinearSystem::diagonal(&[-1.0, -2.0]);
        let traj = integrate(&sys, &DVector::from_vec(vec![1.0, 1.0]), 0.5, 1e-8, 1e-10).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&["a", "b"], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,a,b");
        assert_eq!(text.lines().count(), traj.len() + 1);
    }
}
