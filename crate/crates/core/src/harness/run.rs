use crate::error::{PicError, Result};
use crate::integrators::{step, IntegratorConfig, PicState};

use super::cases::init_case;
use super::config::RunConfig;
use super::diagnostics::{CsvWriter, DiagnosticsRow};

/// Aggregates over all recorded rows of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub rows_written: usize,
    pub initial_energy: f64,
    pub initial_gauss_residual: f64,
    pub max_energy_error: f64,
    pub max_gauss_residual: f64,
    /// Mean Picard iterations per step (zero for the explicit scheme).
    pub mean_iters: f64,
    pub mean_sub_iters: f64,
}

/// A configured case advanced one step at a time.
pub struct Simulation {
    pub config: RunConfig,
    pub integrator: IntegratorConfig<f64>,
    pub state: PicState<f64>,
    pub initial_energy: f64,
    pub initial_gauss_residual: f64,
    step: usize,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        let state = init_case(&config)?;
        let integrator = config.integrator();
        let initial_energy = state.total_energy();
        let initial_gauss_residual = state.gauss_residual(integrator.parallel);
        Ok(Self {
            config,
            integrator,
            state,
            initial_energy,
            initial_gauss_residual,
            step: 0,
        })
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    /// Diagnostics of the current state.
    pub fn diagnostics(&self, picard_iters: usize, sub_iters_mean: f64) -> DiagnosticsRow {
        let en = self.state.energies();
        let total = en.total();
        DiagnosticsRow {
            step: self.step,
            time: self.time(),
            kinetic_energy: en.kinetic,
            e1_energy: en.field.e1_energy,
            e2_energy: en.field.e2_energy,
            b3_energy: en.field.b3_energy,
            total_energy: total,
            energy_error: (total - self.initial_energy).abs(),
            gauss_residual: self.state.gauss_residual(self.integrator.parallel),
            picard_iters,
            sub_iters_mean,
        }
    }

    /// Advances one step and returns its diagnostics row. A non-finite or
    /// blown-up energy is reported as `Diverged` after the row is built, so
    /// callers can still record it via [`Simulation::advance_recorded`].
    pub fn advance(&mut self) -> Result<DiagnosticsRow> {
        let report = step(&mut self.state, &self.integrator, self.config.dt)?;
        self.step += 1;
        Ok(self.diagnostics(report.picard_iterations, report.sub_iterations_mean))
    }

    /// Like [`Simulation::advance`] but passes the row to `record` before
    /// the divergence check.
    pub fn advance_recorded(
        &mut self,
        record: &mut dyn FnMut(&DiagnosticsRow) -> Result<()>,
    ) -> Result<DiagnosticsRow> {
        let row = self.advance()?;
        record(&row)?;
        let limit = self.config.solver.divergence_factor * self.initial_energy.abs();
        if !row.total_energy.is_finite() || row.total_energy > limit {
            return Err(PicError::Diverged {
                step: row.step,
                energy: row.total_energy,
                initial: self.initial_energy,
            });
        }
        Ok(row)
    }
}

/// Runs the configured case for `⌈t_end/dt⌉` steps, handing each recorded
/// row (every `diagnostics_stride` steps and the last step) to `observer`.
pub fn run_with_observer(
    cfg: &RunConfig,
    observer: &mut dyn FnMut(&DiagnosticsRow) -> Result<()>,
) -> Result<RunSummary> {
    let mut sim = Simulation::new(cfg.clone())?;
    let steps = cfg.steps();
    let stride = cfg.diagnostics_stride;
    let mut summary = RunSummary {
        steps,
        initial_energy: sim.initial_energy,
        initial_gauss_residual: sim.initial_gauss_residual,
        ..RunSummary::default()
    };
    let limit = cfg.solver.divergence_factor * sim.initial_energy.abs();
    let (mut iters, mut subs) = (0usize, 0.0);
    for s in 1..=steps {
        let record_this = s % stride == 0 || s == steps;
        let mut rec = |row: &DiagnosticsRow| -> Result<()> {
            summary.max_energy_error = summary.max_energy_error.max(row.energy_error);
            summary.max_gauss_residual = summary.max_gauss_residual.max(row.gauss_residual);
            if record_this || !(row.total_energy <= limit) {
                summary.rows_written += 1;
                observer(row)?;
            }
            Ok(())
        };
        let row = sim.advance_recorded(&mut rec)?;
        iters += row.picard_iters;
        subs += row.sub_iters_mean;
    }
    summary.mean_iters = iters as f64 / steps as f64;
    summary.mean_sub_iters = subs / steps as f64;
    Ok(summary)
}

/// Runs the configured case, writing the diagnostics CSV to `cfg.output`
/// when set. On divergence the rows written so far stay on disk.
pub fn run_simulation(cfg: &RunConfig) -> Result<RunSummary> {
    let mut writer = cfg.output.as_deref().map(CsvWriter::create).transpose()?;
    run_with_observer(cfg, &mut |row| match writer.as_mut() {
        Some(w) => w.write_row(row),
        None => Ok(()),
    })
}
