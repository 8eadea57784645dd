use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PicError, Result};
use crate::fields::{FemOperators, FieldState};
use crate::integrators::{Ordering, PicState};
use crate::particles::{sample_species, SpatialProfile, SpeciesParams, VelocityProfile};
use crate::splines::{Form, SplineSpace};

use super::config::{PhysicsOverride, RunConfig};

/// Built-in test cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    /// Weibel instability, one electron species with anisotropic temperature.
    Weibel,
    /// Electrostatic two-stream instability of two counter-propagating beams.
    TwoStream,
    /// Ion-acoustic wave driven by an ion density perturbation.
    IonAcoustic,
    /// Maxwellian plasma with an under-resolved Debye length.
    Thermal,
}

/// Case-dependent defaults of [`RunConfig`].
#[derive(Clone, Debug, PartialEq)]
pub struct CaseDefaults {
    pub t_end: f64,
    pub n_cells: usize,
    pub length: f64,
    pub ordering: Ordering,
    pub n_particles: Vec<usize>,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Weibel, CaseId::TwoStream, CaseId::IonAcoustic, CaseId::Thermal];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Weibel => "weibel",
            CaseId::TwoStream => "two_stream",
            CaseId::IonAcoustic => "ion_acoustic",
            CaseId::Thermal => "thermal",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            CaseId::Weibel => "Weibel instability: electrons, sigma2 = sqrt(12) sigma1, B3 = beta cos(kx)",
            CaseId::TwoStream => "two-stream instability: electron beams at +-2.4, electrostatic",
            CaseId::IonAcoustic => "ion-acoustic wave: electrons and ions (m_i = 200, T_i = 1e-4)",
            CaseId::Thermal => "thermal plasma with Debye length below the grid spacing",
        }
    }

    pub fn species_count(self) -> usize {
        match self {
            CaseId::IonAcoustic => 2,
            _ => 1,
        }
    }

    pub fn defaults(self) -> CaseDefaults {
        match self {
            CaseId::Weibel => CaseDefaults {
                t_end: 500.0,
                n_cells: 32,
                length: 2.0 * PI / 1.25,
                ordering: Ordering::Standard,
                n_particles: vec![100_000],
            },
            CaseId::TwoStream => CaseDefaults {
                t_end: 200.0,
                n_cells: 64,
                length: 10.0 * PI,
                ordering: Ordering::Standard,
                n_particles: vec![64_000],
            },
            CaseId::IonAcoustic => CaseDefaults {
                t_end: 100.0,
                n_cells: 32,
                length: 10.0,
                ordering: Ordering::FieldLast,
                n_particles: vec![128_000, 128_000],
            },
            CaseId::Thermal => CaseDefaults {
                t_end: 100.0,
                n_cells: 64,
                length: 50.0 * PI,
                ordering: Ordering::Standard,
                n_particles: vec![100_000],
            },
        }
    }

    fn physics_keys(self) -> &'static [&'static str] {
        match self {
            CaseId::Weibel => &["sigma1", "sigma2", "alpha", "beta"],
            CaseId::TwoStream => &["drift", "sigma", "alpha"],
            CaseId::IonAcoustic => &["alpha", "ion_temperature"],
            CaseId::Thermal => &["sigma"],
        }
    }

    /// Rejects physics keys the case does not read.
    pub(crate) fn check_physics(self, p: &PhysicsOverride) -> Result<()> {
        let set = [
            ("sigma1", p.sigma1),
            ("sigma2", p.sigma2),
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("drift", p.drift),
            ("sigma", p.sigma),
            ("ion_temperature", p.ion_temperature),
        ];
        for (key, value) in set {
            let Some(v) = value else { continue };
            if !self.physics_keys().contains(&key) {
                return Err(PicError::InvalidConfig(format!(
                    "`physics.{key}`: not used by case `{}`",
                    self.name()
                )));
            }
            if !v.is_finite() {
                return Err(PicError::InvalidConfig(format!("`physics.{key}`: must be finite")));
            }
            let positive = matches!(key, "sigma1" | "sigma2" | "sigma" | "ion_temperature");
            if positive && v <= 0.0 {
                return Err(PicError::InvalidConfig(format!("`physics.{key}`: must be positive")));
            }
            if key == "alpha" && v.abs() >= 1.0 {
                return Err(PicError::InvalidConfig("`physics.alpha`: must lie in (-1, 1)".into()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = PicError;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| PicError::UnknownCase(s.to_string()))
    }
}

/// Particle and field parameters of a configured case.
struct CaseSetup {
    species: Vec<SpeciesParams<f64>>,
    /// Initial `B3(x)`, if nonzero.
    b3: Option<Box<dyn Fn(f64) -> f64>>,
    neutralizing_background: bool,
}

fn electrons(spatial: SpatialProfile<f64>, v1: VelocityProfile<f64>, v2: VelocityProfile<f64>) -> SpeciesParams<f64> {
    SpeciesParams {
        name: "electrons".into(),
        charge: -1.0,
        mass: 1.0,
        density: 1.0,
        spatial,
        v1,
        v2,
    }
}

fn spatial(alpha: f64, k: f64) -> SpatialProfile<f64> {
    if alpha == 0.0 {
        SpatialProfile::Uniform
    } else {
        SpatialProfile::Cosine {
            amplitude: alpha,
            wavenumber: k,
        }
    }
}

fn setup(cfg: &RunConfig) -> CaseSetup {
    let p = &cfg.physics;
    let k = 2.0 * PI / cfg.domain_length();
    match cfg.case {
        CaseId::Weibel => {
            let sigma1 = p.sigma1.unwrap_or(0.02 / 2f64.sqrt());
            let sigma2 = p.sigma2.unwrap_or(12f64.sqrt() * sigma1);
            let beta = p.beta.unwrap_or(1e-4);
            CaseSetup {
                species: vec![electrons(
                    spatial(p.alpha.unwrap_or(0.0), k),
                    VelocityProfile::maxwellian(sigma1),
                    VelocityProfile::maxwellian(sigma2),
                )],
                b3: Some(Box::new(move |x| beta * (k * x).cos())),
                neutralizing_background: true,
            }
        }
        CaseId::TwoStream => {
            let sigma = p.sigma.unwrap_or(1.0);
            CaseSetup {
                species: vec![electrons(
                    spatial(p.alpha.unwrap_or(0.0), k),
                    VelocityProfile::counter_streams(p.drift.unwrap_or(2.4), sigma),
                    VelocityProfile::maxwellian(sigma),
                )],
                b3: None,
                neutralizing_background: true,
            }
        }
        CaseId::IonAcoustic => {
            let mass_i = cfg.species.get(1).and_then(|o| o.mass).unwrap_or(200.0);
            let sigma_i = (p.ion_temperature.unwrap_or(1e-4) / mass_i).sqrt();
            let e = electrons(
                SpatialProfile::Uniform,
                VelocityProfile::maxwellian(1.0),
                VelocityProfile::maxwellian(1.0),
            );
            let i = SpeciesParams {
                name: "ions".into(),
                charge: 1.0,
                mass: mass_i,
                density: 1.0,
                spatial: spatial(p.alpha.unwrap_or(0.2), k),
                v1: VelocityProfile::maxwellian(sigma_i),
                v2: VelocityProfile::maxwellian(sigma_i),
            };
            CaseSetup {
                species: vec![e, i],
                b3: None,
                neutralizing_background: false,
            }
        }
        CaseId::Thermal => {
            let sigma = p.sigma.unwrap_or(0.2);
            CaseSetup {
                species: vec![electrons(
                    SpatialProfile::Uniform,
                    VelocityProfile::maxwellian(sigma),
                    VelocityProfile::maxwellian(sigma),
                )],
                b3: None,
                neutralizing_background: true,
            }
        }
    }
}

/// Builds the initial state of the configured case.
///
/// Particles are sampled with one ChaCha stream per species; `B3` is the L²
/// projection of the case's profile, `e2 = 0` and `e1` solves the discrete
/// Poisson problem for the deposited charge (plus a uniform neutralizing
/// background for the single-species electron cases).
pub fn init_case(cfg: &RunConfig) -> Result<PicState<f64>> {
    cfg.validate()?;
    let space = SplineSpace::new(cfg.degree, cfg.n_cells(), cfg.domain_length())?;
    let ops = FemOperators::new(space);
    let n = ops.n();
    let setup = setup(cfg);
    let defaults = cfg.case.defaults();

    let mut species = Vec::with_capacity(setup.species.len());
    for (s, mut params) in setup.species.into_iter().enumerate() {
        let o = cfg.species.get(s).cloned().unwrap_or_default();
        if let Some(q) = o.charge {
            params.charge = q;
        }
        if let Some(m) = o.mass {
            params.mass = m;
        }
        let n_p = o.n_particles.unwrap_or(defaults.n_particles[s]);
        species.push(sample_species(&params, ops.space().length(), n_p, cfg.seed, s as u64)?);
    }

    let mut fields = FieldState::zeros(n);
    if let Some(b3) = &setup.b3 {
        fields.b3 = ops.l2_project(Form::One, b3);
    }
    let mut state = PicState::new(ops, fields, species);
    if setup.neutralizing_background {
        // Cancels the deposited mean itself, so summation round-off in the
        // particle charge does not show up as net charge.
        let rho = state.charge_density(!cfg.deterministic);
        let mean = rho.iter().sum::<f64>() / n as f64;
        state.background = vec![-mean; n];
    }
    let rho = state.charge_density(!cfg.deterministic);
    state.fields.e1 = state.ops.poisson_init(&rho)?;
    Ok(state)
}
