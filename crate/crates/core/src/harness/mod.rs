//! Run configuration, built-in cases, the time loop and CSV diagnostics.

mod cases;
mod config;
mod diagnostics;
mod run;

pub use cases::{init_case, CaseDefaults, CaseId};
pub use config::{load_config, PhysicsOverride, RunConfig, SolverOptions, SpeciesOverride, Tolerances};
pub use diagnostics::{csv_header, read_diagnostics_csv, CsvWriter, DiagnosticsRow, CSV_COLUMNS};
pub use run::{run_simulation, run_with_observer, RunSummary, Simulation};
