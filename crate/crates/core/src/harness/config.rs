use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PicError, Result};
use crate::integrators::{IntegratorConfig, Ordering, Preconditioner, Scheme};

use super::cases::CaseId;

/// Run description as read from a TOML file. Keys left out take the
/// documented defaults; case-dependent keys default per case (see
/// [`CaseId::defaults`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: CaseId,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<Ordering>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub diagnostics_stride: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub species: Vec<SpeciesOverride>,
    #[serde(default, skip_serializing_if = "PhysicsOverride::is_empty")]
    pub physics: PhysicsOverride,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub nonlinear: f64,
    pub linear: f64,
    pub sub: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            nonlinear: 1e-12,
            linear: 1e-15,
            sub: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_picard: usize,
    pub max_sub_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cg_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
    /// Energy blow-up factor that marks a run as diverged.
    pub divergence_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_picard: 200,
            max_sub_iterations: 200,
            max_cg_iterations: None,
            preconditioner: Preconditioner::Mass,
            divergence_factor: 1e3,
        }
    }
}

/// Per-species overrides, matched to the case's species by position.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_particles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
}

/// Physical parameters of the cases; each case reads only its own keys.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ion_temperature: Option<f64>,
}

impl PhysicsOverride {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

fn default_degree() -> usize {
    3
}
fn default_seed() -> u64 {
    1
}
fn default_true() -> bool {
    true
}
fn default_stride() -> usize {
    1
}

impl RunConfig {
    /// Minimal configuration: case and time step, everything else default.
    pub fn new(case: CaseId, dt: f64) -> Self {
        Self {
            case,
            dt,
            t_end: None,
            scheme: Scheme::default(),
            ordering: None,
            n_cells: None,
            degree: default_degree(),
            length: None,
            wavenumber: None,
            seed: default_seed(),
            deterministic: true,
            output: None,
            diagnostics_stride: 1,
            tolerances: Tolerances::default(),
            solver: SolverOptions::default(),
            species: Vec::new(),
            physics: PhysicsOverride::default(),
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_end.unwrap_or(self.case.defaults().t_end)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells.unwrap_or(self.case.defaults().n_cells)
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering.unwrap_or(self.case.defaults().ordering)
    }

    /// Domain length from `length`, else from `wavenumber` (`2π/k`), else the case default.
    pub fn domain_length(&self) -> f64 {
        match (self.length, self.wavenumber) {
            (Some(l), _) => l,
            (None, Some(k)) => 2.0 * std::f64::consts::PI / k,
            (None, None) => self.case.defaults().length,
        }
    }

    /// Number of time steps `⌈t_end / dt⌉` (with a small tolerance against
    /// round-off in the ratio).
    pub fn steps(&self) -> usize {
        let r = self.t_end() / self.dt;
        let rounded = r.round();
        if (r - rounded).abs() <= 1e-9 * r.max(1.0) {
            rounded as usize
        } else {
            r.ceil() as usize
        }
    }

    pub fn integrator(&self) -> IntegratorConfig<f64> {
        let substeps = (0..self.case.species_count())
            .map(|s| self.species.get(s).and_then(|o| o.substeps).unwrap_or(1))
            .collect();
        IntegratorConfig {
            scheme: self.scheme,
            ordering: self.ordering(),
            nonlinear_tol: self.tolerances.nonlinear,
            linear_tol: self.tolerances.linear,
            sub_tol: self.tolerances.sub,
            substeps,
            max_picard: self.solver.max_picard,
            max_sub_iterations: self.solver.max_sub_iterations,
            max_cg_iterations: self.solver.max_cg_iterations,
            preconditioner: self.solver.preconditioner,
            parallel: !self.deterministic,
        }
    }

    /// Checks value ranges; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(PicError::InvalidConfig(format!("`{key}`: {msg}")));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        let t_end = self.t_end();
        if !(t_end.is_finite() && t_end >= self.dt) {
            return bad("t_end", format!("must be at least dt, got {t_end}"));
        }
        if self.degree == 0 || self.degree > crate::splines::MAX_DEGREE {
            return bad("degree", format!("must be in 1..={}", crate::splines::MAX_DEGREE));
        }
        if self.n_cells() < 2 * self.degree + 1 {
            return bad(
                "n_cells",
                format!("must be at least 2·degree+1 = {}", 2 * self.degree + 1),
            );
        }
        let l = self.domain_length();
        if !(l.is_finite() && l > 0.0) {
            return bad("length", format!("must be positive, got {l}"));
        }
        if self.diagnostics_stride == 0 {
            return bad("diagnostics_stride", "must be at least 1".into());
        }
        if self.species.len() > self.case.species_count() {
            return bad(
                "species",
                format!("case `{}` has {} species", self.case.name(), self.case.species_count()),
            );
        }
        for o in &self.species {
            if o.n_particles == Some(0) {
                return bad("species.n_particles", "must be positive".into());
            }
            if o.substeps == Some(0) {
                return bad("species.substeps", "must be at least 1".into());
            }
            if let Some(m) = o.mass {
                if !(m > 0.0) {
                    return bad("species.mass", "must be positive".into());
                }
            }
        }
        if self.solver.divergence_factor <= 1.0 {
            return bad("solver.divergence_factor", "must exceed 1".into());
        }
        self.case.check_physics(&self.physics)?;
        self.integrator().validate()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| PicError::Parse(e.to_string()))
    }

    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PicError::Parse(e.to_string()))?;
        cfg.validate().map_err(|e| match e {
            PicError::InvalidConfig(msg) => {
                let key = msg
                    .strip_prefix('`')
                    .and_then(|s| s.split('`').next())
                    .unwrap_or_default()
                    .to_string();
                match key_line(text, &key) {
                    Some(line) => PicError::Parse(format!("line {line}, key {msg}")),
                    None => PicError::Parse(format!("key {msg}")),
                }
            }
            other => other,
        })?;
        Ok(cfg)
    }
}

/// 1-based line on which `key` (last dotted component) is assigned.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next()?;
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(leaf)
                .map(|rest| rest.trim_start().starts_with('='))
                .unwrap_or(false)
        })
        .map(|i| i + 1)
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_toml(&text)
}
