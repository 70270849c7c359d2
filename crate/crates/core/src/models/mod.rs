//! Registry of the benchmark reaction systems with analytic vector fields,
//! Jacobians, Jacobian time-derivatives, parameter presets, and
//! stoichiometric decompositions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlimError};

pub mod fcsi;
pub mod mm;
pub mod tmdd;

pub use fcsi::FcsiParams;
pub use mm::MmParams;
pub use tmdd::TmddParams;

/// A benchmark ODE system `dz/dt = F(z)` with its rate constants baked in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Mm(MmParams),
    Tmdd(TmddParams),
    FcsiOriginal(FcsiParams),
    FcsiTransformed(FcsiParams),
}

impl Model {
    /// Stable string identifier used in config files and CLI flags.
    pub fn id(&self) -> &'static str {
        match self {
            Model::Mm(_) => "mm",
            Model::Tmdd(_) => "tmdd",
            Model::FcsiOriginal(_) => "fcsi-original",
            Model::FcsiTransformed(_) => "fcsi-transformed",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Mm(_) => 2,
            Model::Tmdd(_) => 3,
            Model::FcsiOriginal(_) | Model::FcsiTransformed(_) => 4,
        }
    }

    pub fn reaction_count(&self) -> usize {
        match self {
            Model::Mm(_) => 2,
            Model::Tmdd(_) => 5,
            Model::FcsiOriginal(_) | Model::FcsiTransformed(_) => 4,
        }
    }

    pub fn variable_names(&self) -> &'static [&'static str] {
        match self {
            Model::Mm(_) => &mm::VAR_NAMES,
            Model::Tmdd(_) => &tmdd::VAR_NAMES,
            Model::FcsiOriginal(_) => &fcsi::VAR_NAMES_ORIGINAL,
            Model::FcsiTransformed(_) => &fcsi::VAR_NAMES_TRANSFORMED,
        }
    }

    fn check_dim(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(SlimError::InvalidInput(format!(
                "state length {} does not match model '{}' dimension {}",
                z.len(),
                self.id(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn vector_field(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z)?;
        Ok(match self {
            Model::Mm(p) => mm::vector_field(p, z),
            Model::Tmdd(p) => tmdd::vector_field(p, z),
            Model::FcsiOriginal(p) => fcsi::vector_field_original(p, z),
            Model::FcsiTransformed(p) => fcsi::vector_field_transformed(p, z),
        })
    }

    pub fn jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(z)?;
        Ok(match self {
            Model::Mm(p) => mm::jacobian(p, z),
            Model::Tmdd(p) => tmdd::jacobian(p, z),
            Model::FcsiOriginal(p) => fcsi::jacobian_original(p, z),
            Model::FcsiTransformed(p) => fcsi::jacobian_transformed(p, z),
        })
    }

    /// Analytic `dJ/dt = sum_k (dJ/dz_k) F_k(z)` along the flow.
    pub fn jacobian_time_derivative(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(z)?;
        Ok(match self {
            Model::Mm(p) => mm::jacobian_time_derivative(p, z),
            Model::Tmdd(p) => tmdd::jacobian_time_derivative(p, z),
            Model::FcsiOriginal(p) => fcsi::jacobian_time_derivative_original(p, z),
            Model::FcsiTransformed(p) => fcsi::jacobian_time_derivative_transformed(p, z),
        })
    }

    /// Stoichiometric matrix `S` (N x K) in the canonical reaction order.
    pub fn stoichiometry(&self) -> DMatrix<f64> {
        match self {
            Model::Mm(_) => mm::stoichiometry(),
            Model::Tmdd(_) => tmdd::stoichiometry(),
            Model::FcsiOriginal(_) => fcsi::stoichiometry_original(),
            Model::FcsiTransformed(_) => fcsi::stoichiometry_transformed(),
        }
    }

    /// Reaction rate vector `R(z)` (K entries).
    pub fn reaction_rates(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(z)?;
        Ok(match self {
            Model::Mm(p) => mm::reaction_rates(p, z),
            Model::Tmdd(p) => tmdd::reaction_rates(p, z),
            Model::FcsiOriginal(p) => fcsi::reaction_rates_original(p, z),
            Model::FcsiTransformed(p) => fcsi::reaction_rates_transformed(p, z),
        })
    }

    /// Rate Jacobian `dR/dz` (K x N).
    pub fn rate_jacobian(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(z)?;
        Ok(match self {
            Model::Mm(p) => mm::rate_jacobian(p, z),
            Model::Tmdd(p) => tmdd::rate_jacobian(p, z),
            Model::FcsiOriginal(p) => fcsi::rate_jacobian_original(p, z),
            Model::FcsiTransformed(p) => fcsi::rate_jacobian_transformed(p, z),
        })
    }

    /// Reordered decomposition with the chosen fast variables and fast
    /// reactions first.
    pub fn stoichiometric_form(
        &self,
        fast_variables: &[usize],
        fast_reactions: &[usize],
    ) -> Result<StoichiometricForm> {
        StoichiometricForm::new(self.clone(), fast_variables, fast_reactions)
    }
}

fn disjoint_order(fast: &[usize], total: usize, what: &str) -> Result<Vec<usize>> {
    let mut seen = vec![false; total];
    for &i in fast {
        if i >= total {
            return Err(SlimError::InvalidInput(format!(
                "{what} index {i} out of range 0..{total}"
            )));
        }
        if seen[i] {
            return Err(SlimError::InvalidInput(format!(
                "duplicate {what} index {i}"
            )));
        }
        seen[i] = true;
    }
    let mut order: Vec<usize> = fast.to_vec();
    order.extend((0..total).filter(|i| !seen[*i]));
    Ok(order)
}

/// The system `dz/dt = S R(z)` reordered so the `M` fast variables and fast
/// reactions come first, exposing the four stoichiometric blocks.
#[derive(Debug, Clone)]
pub struct StoichiometricForm {
    model: Model,
    /// Variable permutation: reordered position -> original index.
    pub var_order: Vec<usize>,
    /// Reaction permutation: reordered position -> original index.
    pub reaction_order: Vec<usize>,
    pub m: usize,
    /// Reordered `S` (rows follow `var_order`, columns `reaction_order`).
    pub s: DMatrix<f64>,
}

impl StoichiometricForm {
    pub fn new(model: Model, fast_variables: &[usize], fast_reactions: &[usize]) -> Result<Self> {
        if fast_variables.len() != fast_reactions.len() {
            return Err(SlimError::InvalidInput(format!(
                "need as many fast reactions as fast variables, got {} vs {}",
                fast_reactions.len(),
                fast_variables.len()
            )));
        }
        let m = fast_variables.len();
        if m == 0 || m >= model.dim() {
            return Err(SlimError::InvalidInput(format!(
                "fast dimension {m} must satisfy 0 < M < N = {}",
                model.dim()
            )));
        }
        let var_order = disjoint_order(fast_variables, model.dim(), "fast variable")?;
        let reaction_order = disjoint_order(fast_reactions, model.reaction_count(), "fast reaction")?;
        let s_full = model.stoichiometry();
        let s = DMatrix::from_fn(model.dim(), model.reaction_count(), |i, j| {
            s_full[(var_order[i], reaction_order[j])]
        });
        Ok(StoichiometricForm {
            model,
            var_order,
            reaction_order,
            m,
            s,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.model.dim()
    }

    pub fn k(&self) -> usize {
        self.model.reaction_count()
    }

    /// Indices of the fast variables in the original ordering.
    pub fn fast_variables(&self) -> &[usize] {
        &self.var_order[..self.m]
    }

    /// Top-left block `S^M_M` (fast rows, fast reactions).
    pub fn s_fast_fast(&self) -> DMatrix<f64> {
        self.s.view((0, 0), (self.m, self.m)).into_owned()
    }

    /// Bottom-left block `S^{N-M}_M`.
    pub fn s_slow_fast(&self) -> DMatrix<f64> {
        self.s
            .view((self.m, 0), (self.n() - self.m, self.m))
            .into_owned()
    }

    /// Top-right block `S^M_{K-M}`.
    pub fn s_fast_slow(&self) -> DMatrix<f64> {
        self.s.view((0, self.m), (self.m, self.k() - self.m)).into_owned()
    }

    /// Bottom-right block `S^{N-M}_{K-M}`.
    pub fn s_slow_slow(&self) -> DMatrix<f64> {
        self.s
            .view((self.m, self.m), (self.n() - self.m, self.k() - self.m))
            .into_owned()
    }

    /// Rates in reordered reaction order; `z` stays in original coordinates.
    pub fn rates(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let r = self.model.reaction_rates(z)?;
        Ok(DVector::from_iterator(
            self.k(),
            self.reaction_order.iter().map(|&j| r[j]),
        ))
    }

    /// `dR^M/dz^M` and `dR^M/dz^{N-M}` blocks of the reordered rate
    /// Jacobian, as needed by the partial-equilibrium basis vectors.
    pub fn fast_rate_jacobian_blocks(&self, z: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let full = self.model.rate_jacobian(z)?;
        let m = self.m;
        let fast_block = DMatrix::from_fn(m, m, |i, j| {
            full[(self.reaction_order[i], self.var_order[j])]
        });
        let slow_block = DMatrix::from_fn(m, self.n() - m, |i, j| {
            full[(self.reaction_order[i], self.var_order[m + j])]
        });
        Ok((fast_block, slow_block))
    }
}

/// Anything the integrator and CSP machinery can work on: analytic vector
/// field, Jacobian, and Jacobian time-derivative.
pub trait Dynamics {
    fn dim(&self) -> usize;
    fn id(&self) -> &str;
    fn f(&self, z: &DVector<f64>) -> Result<DVector<f64>>;
    fn jac(&self, z: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn jac_dt(&self, z: &DVector<f64>) -> Result<DMatrix<f64>>;
}

impl Dynamics for Model {
    fn dim(&self) -> usize {
        Model::dim(self)
    }
    fn id(&self) -> &str {
        Model::id(self)
    }
    fn f(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.vector_field(z)
    }
    fn jac(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.jacobian(z)
    }
    fn jac_dt(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.jacobian_time_derivative(z)
    }
}

/// Constant-coefficient linear system `dz/dt = A z`, mainly a test fixture
/// with known fast/slow structure.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        LinearSystem { a }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        LinearSystem::new(DMatrix::from_diagonal(&DVector::from_row_slice(entries)))
    }
}

impl Dynamics for LinearSystem {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn id(&self) -> &str {
        "linear"
    }
    fn f(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.a * z)
    }
    fn jac(&self, _z: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.a.clone())
    }
    fn jac_dt(&self, _z: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(self.a.nrows(), self.a.ncols()))
    }
}

/// Which on-SIM window of a trajectory a dataset draws from. Relevant for
/// the TMDD system, whose trajectories visit two distinct M = 1 manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowSelect {
    All,
    M1,
    M2,
}

impl WindowSelect {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(WindowSelect::All),
            "m1" => Ok(WindowSelect::M1),
            "m2" => Ok(WindowSelect::M2),
            other => Err(SlimError::Config(format!(
                "unknown window selector '{other}' (expected all|m1|m2)"
            ))),
        }
    }
}

/// Frozen experiment preset: rate constants, phase-space box, IC sampling
/// box, integration horizon and tolerances, and collocation count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Preset {
    pub id: String,
    pub model: Model,
    /// Region of interest (per-variable min/max) in which the SIM is
    /// approximated. For TMDD this depends on the window: `omega_m1` covers
    /// the first manifold and `omega` the final approach.
    pub omega: Vec<(f64, f64)>,
    pub omega_m1: Option<Vec<(f64, f64)>>,
    /// Initial conditions are sampled uniformly from this box (outside the
    /// region of interest).
    pub ic_box: Vec<(f64, f64)>,
    /// Integration horizon long enough for trajectories to traverse the
    /// on-SIM window inside the region of interest.
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Default collocation-set size.
    pub n_collocation: usize,
    /// Fast dimension detected on the manifold of interest.
    pub m_target: usize,
}

impl Preset {
    /// Region of interest for the selected window.
    pub fn omega_for(&self, window: WindowSelect) -> &[(f64, f64)] {
        match (window, &self.omega_m1) {
            (WindowSelect::M1, Some(m1)) => m1,
            _ => &self.omega,
        }
    }

    /// Number of initial conditions: `5^N`.
    pub fn ic_count(&self) -> usize {
        5usize.pow(self.model.dim() as u32)
    }

    /// Test-set size: `100 * 5^N`.
    pub fn test_count(&self) -> usize {
        100 * self.ic_count()
    }

    /// Looks up `(model id, preset id)` in the registry.
    pub fn resolve(model_id: &str, preset_id: &str) -> Result<Preset> {
        let preset = match (model_id, preset_id) {
            ("mm", "mm1") => Preset {
                id: "mm1".into(),
                model: Model::Mm(MmParams {
                    k1f: 1.0,
                    k1b: 1e2,
                    k2: 1.0,
                    e0: 1.0,
                }),
                omega: vec![(1e-3, 1e3), (1e-5, 1.0)],
                omega_m1: None,
                ic_box: vec![(1000.0, 1100.0), (0.0, 1.0)],
                t_end: 4000.0,
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                n_collocation: 500,
                m_target: 1,
            },
            ("mm", "mm2") => Preset {
                id: "mm2".into(),
                model: Model::Mm(MmParams {
                    k1f: 1.0,
                    k1b: 1.0,
                    k2: 1e-2,
                    e0: 1e2,
                }),
                omega: vec![(1e-5, 1.0), (1e-3, 50.0)],
                omega_m1: None,
                ic_box: vec![(0.0, 1.0), (50.0, 51.0)],
                t_end: 1500.0,
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                n_collocation: 500,
                m_target: 1,
            },
            ("mm", "mm3") => Preset {
                id: "mm3".into(),
                model: Model::Mm(MmParams {
                    k1f: 1.0,
                    k1b: 1.0,
                    k2: 1e3,
                    e0: 10.0,
                }),
                omega: vec![(1e-3, 1e2), (1e-5, 1.0)],
                omega_m1: None,
                ic_box: vec![(100.0, 110.0), (9.0, 10.0)],
                t_end: 8.0,
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                n_collocation: 500,
                m_target: 1,
            },
            ("tmdd", "tmdd-default") => Preset {
                id: "tmdd-default".into(),
                model: Model::Tmdd(TmddParams {
                    kon: 0.091,
                    koff: 0.001,
                    kel: 0.0015,
                    ksyn: 0.11,
                    kdeg: 0.0089,
                    kint: 0.003,
                }),
                omega: vec![(0.0, 0.05), (6.0, 13.0), (6.0, 27.0)],
                omega_m1: Some(vec![(10.0, 140.0), (0.0, 0.12), (10.0, 33.0)]),
                ic_box: vec![(50.0, 150.0), (10.0, 15.0), (0.0, 1.0)],
                t_end: 4000.0,
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                n_collocation: 700,
                m_target: 1,
            },
            ("fcsi-original", "fcsi-default") => Preset {
                id: "fcsi-default".into(),
                model: Model::FcsiOriginal(FCSI_PARAMS),
                omega: vec![(1e-5, 50.0), (1e-5, 30.0), (1e-3, 50.0), (1e-3, 30.0)],
                omega_m1: None,
                ic_box: vec![(50.0, 150.0), (0.0, 1.0), (50.0, 150.0), (0.0, 1.0)],
                t_end: 1500.0,
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                n_collocation: 700,
                m_target: 2,
            },
            ("fcsi-transformed", "fcsi-default") => Preset {
                id: "fcsi-default".into(),
                model: Model::FcsiTransformed(FCSI_PARAMS),
                omega: vec![(1e-5, 80.0), (1e-5, 30.0), (1e-3, 80.0), (1e-3, 30.0)],
                omega_m1: None,
                // Sampled as (s1, c1, s2, c2); mapped to totals below.
                ic_box: vec![(50.0, 150.0), (0.0, 1.0), (50.0, 150.0), (0.0, 1.0)],
                t_end: 1500.0,
                rel_tol: 1e-10,
                abs_tol: 1e-12,
                n_collocation: 700,
                m_target: 2,
            },
            _ => {
                return Err(SlimError::Config(format!(
                    "no preset '{preset_id}' for model '{model_id}'"
                )))
            }
        };
        Ok(preset)
    }

    /// Draws one initial condition from the IC box. For the transformed
    /// fCSI system the box is sampled in original coordinates and mapped to
    /// totals `s_i_bar = s_i + c_i`.
    pub fn sample_ic(&self, rng: &mut impl rand::Rng) -> DVector<f64> {
        let mut z = DVector::from_iterator(
            self.ic_box.len(),
            self.ic_box.iter().map(|&(lo, hi)| {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            }),
        );
        if matches!(self.model, Model::FcsiTransformed(_)) {
            z[0] += z[1];
            z[2] += z[3];
        }
        z
    }

    /// All registered `(model id, preset id)` pairs.
    pub fn registry() -> &'static [(&'static str, &'static str)] {
        &[
            ("mm", "mm1"),
            ("mm", "mm2"),
            ("mm", "mm3"),
            ("tmdd", "tmdd-default"),
            ("fcsi-original", "fcsi-default"),
            ("fcsi-transformed", "fcsi-default"),
        ]
    }
}

const FCSI_PARAMS: FcsiParams = FcsiParams {
    k1f: 0.1522,
    k1b: 2.8,
    k2: 0.7,
    k3f: 0.0833,
    k3b: 1.667,
    k4: 0.4167,
    e0: 50.0,
};
