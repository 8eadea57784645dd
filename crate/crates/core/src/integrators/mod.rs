//! Time integrators built from the four split operators
//!
//! * O1: drift `ẋ = v1`,
//! * O2: rotation of `(v1, v2)` in the magnetic field,
//! * O3: the curl pair `(e2, b3)`,
//! * O4: the coupling of velocities and electric field,
//!
//! plus the explicit Hamiltonian splitting used as a baseline.

mod disgrad;
mod hs;
mod ops;

pub use disgrad::{disgrad_strang_step, disgrad_sub_step, disgrad_sub_vxe_solve, disgrad_vxe_solve};
pub use hs::{hs_step, hs_substep_b, hs_substep_e, hs_substep_p1, hs_substep_p2};
pub use ops::{avf_strang_step, op1_drift, op2_rotate, op3_curl, op4_ve_avf, LinearSolve};

use serde::{Deserialize, Serialize};

use crate::error::{PicError, Result};
use crate::fields::{FemOperators, FieldEnergy, FieldState};
use crate::particles::{deposit_charge, kinetic_energy, Species};
use crate::scalar::Real;
use crate::splines::SplineSpace;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Explicit Hamiltonian splitting.
    Hs,
    /// Average-vector-field Strang splitting.
    Avf,
    /// Gauss-law preserving discrete gradient.
    #[default]
    #[serde(alias = "disgrad")]
    DisGrad,
    /// Discrete gradient with per-species substepping.
    #[serde(alias = "disgrad_sub")]
    DisGradSub,
}

/// Placement of the curl step O3 relative to the particle operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// AVF: O3 O1 O2 O4; discrete gradient: O3 O2 O4.
    #[default]
    Standard,
    /// AVF: O1 O2 O3 O4; discrete gradient: O2 O3 O4.
    FieldLast,
}

/// Preconditioner of the O4 conjugate-gradient solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// Field mass matrix, inverted in Fourier space.
    #[default]
    Mass,
    /// Mass matrix scaled by `1 + dt²/4 Σ (q²/m) n̄`, the expected value of
    /// the sampled mass for uniformly distributed particles.
    ScaledMass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub scheme: Scheme,
    pub ordering: Ordering,
    /// Picard tolerance on `‖Δe‖₂` of the outer iteration.
    pub nonlinear_tol: T,
    /// Relative residual tolerance of the conjugate-gradient solve.
    pub linear_tol: T,
    /// Tolerance of the per-particle substep iteration.
    pub sub_tol: T,
    /// Substeps per species; missing entries mean one.
    pub substeps: Vec<usize>,
    pub max_picard: usize,
    pub max_sub_iterations: usize,
    /// Conjugate-gradient iteration cap; `None` means `10 n`.
    pub max_cg_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
    /// Distribute particle loops over the rayon pool. Results do not depend
    /// on this flag because partial sums are reduced in a fixed order.
    pub parallel: bool,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            ordering: Ordering::default(),
            nonlinear_tol: T::lit(1e-12),
            linear_tol: T::lit(1e-15),
            sub_tol: T::lit(1e-10),
            substeps: Vec::new(),
            max_picard: 200,
            max_sub_iterations: 200,
            max_cg_iterations: None,
            preconditioner: Preconditioner::default(),
            parallel: false,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.nonlinear_tol) || !positive(self.linear_tol) || !positive(self.sub_tol) {
            return Err(PicError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.substeps.contains(&0) {
            return Err(PicError::InvalidConfig("substeps must be at least 1".into()));
        }
        if self.max_picard == 0 || self.max_sub_iterations == 0 {
            return Err(PicError::InvalidConfig("iteration caps must be positive".into()));
        }
        Ok(())
    }

    pub fn substeps_for(&self, species: usize) -> usize {
        self.substeps.get(species).copied().unwrap_or(1)
    }
}

/// Per-step observables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport<T> {
    pub dt: T,
    pub picard_iterations: usize,
    pub sub_iterations_mean: T,
    pub linear_solver_residual: T,
    pub energy_before: T,
    pub energy_after: T,
    pub gauss_residual_after: T,
}

/// Kinetic and field energies of a state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Energies<T> {
    pub kinetic: T,
    pub field: FieldEnergy<T>,
}

impl<T: Real> Energies<T> {
    pub fn total(&self) -> T {
        self.kinetic + self.field.total()
    }
}

/// Complete simulation state: operators, fields, particles and a static
/// background charge (zero unless a neutralizing background is used).
#[derive(Clone, Debug)]
pub struct PicState<T: Real> {
    pub ops: FemOperators<T>,
    pub fields: FieldState<T>,
    pub species: Vec<Species<T>>,
    pub background: Vec<T>,
}

impl<T: Real> PicState<T> {
    pub fn new(ops: FemOperators<T>, fields: FieldState<T>, species: Vec<Species<T>>) -> Self {
        let n = ops.n();
        Self {
            ops,
            fields,
            species,
            background: vec![T::zero(); n],
        }
    }

    pub fn space(&self) -> &SplineSpace<T> {
        self.ops.space()
    }

    /// Particle charge density plus the static background.
    pub fn charge_density(&self, parallel: bool) -> Vec<T> {
        let mut rho = deposit_charge(self.ops.space(), &self.species, parallel);
        for (r, &b) in rho.iter_mut().zip(&self.background) {
            *r += b;
        }
        rho
    }

    pub fn gauss_residual(&self, parallel: bool) -> T {
        self.ops.gauss_residual(&self.fields.e1, &self.charge_density(parallel))
    }

    pub fn energies(&self) -> Energies<T> {
        Energies {
            kinetic: kinetic_energy(&self.species),
            field: self.ops.field_energy(&self.fields),
        }
    }

    pub fn total_energy(&self) -> T {
        self.energies().total()
    }
}

/// Advances `state` by one step of the configured scheme.
pub fn step<T: Real>(state: &mut PicState<T>, cfg: &IntegratorConfig<T>, dt: T) -> Result<StepReport<T>> {
    if !(dt.is_finite() && dt > T::zero()) {
        return Err(PicError::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    match cfg.scheme {
        Scheme::Hs => hs_step(state, cfg, dt),
        Scheme::Avf => avf_strang_step(state, cfg, dt),
        Scheme::DisGrad => disgrad_strang_step(state, cfg, dt),
        Scheme::DisGradSub => disgrad_sub_step(state, cfg, dt),
    }
}

pub(crate) fn finish_report<T: Real>(
    state: &PicState<T>,
    cfg: &IntegratorConfig<T>,
    mut report: StepReport<T>,
) -> StepReport<T> {
    report.energy_after = state.total_energy();
    report.gauss_residual_after = state.gauss_residual(cfg.parallel);
    report
}
