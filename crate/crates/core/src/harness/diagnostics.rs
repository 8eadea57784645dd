use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{PicError, Result};

/// Column names of the diagnostics CSV, in order.
pub const CSV_COLUMNS: [&str; 11] = [
    "step",
    "time",
    "kinetic_energy",
    "e1_energy",
    "e2_energy",
    "b3_energy",
    "total_energy",
    "energy_error",
    "gauss_residual",
    "picard_iters",
    "sub_iters_mean",
];

/// One line of diagnostics, recorded after a step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time: f64,
    pub kinetic_energy: f64,
    pub e1_energy: f64,
    pub e2_energy: f64,
    pub b3_energy: f64,
    pub total_energy: f64,
    /// `|H(t) - H(0)|`.
    pub energy_error: f64,
    /// `‖Dᵀ M1 e1 + ρ‖∞`.
    pub gauss_residual: f64,
    pub picard_iters: usize,
    pub sub_iters_mean: f64,
}

impl DiagnosticsRow {
    /// CSV line without the newline; floats carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            self.step,
            self.time,
            self.kinetic_energy,
            self.e1_energy,
            self.e2_energy,
            self.b3_energy,
            self.total_energy,
            self.energy_error,
            self.gauss_residual,
            self.picard_iters,
            self.sub_iters_mean,
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let cells: Vec<&str> = line.trim().split(',').collect();
        if cells.len() != CSV_COLUMNS.len() {
            return Err(PicError::Parse(format!(
                "expected {} columns, found {}",
                CSV_COLUMNS.len(),
                cells.len()
            )));
        }
        let f = |i: usize| -> Result<f64> {
            cells[i]
                .parse()
                .map_err(|_| PicError::Parse(format!("column `{}`: bad number `{}`", CSV_COLUMNS[i], cells[i])))
        };
        let u = |i: usize| -> Result<usize> {
            cells[i]
                .parse()
                .map_err(|_| PicError::Parse(format!("column `{}`: bad integer `{}`", CSV_COLUMNS[i], cells[i])))
        };
        Ok(Self {
            step: u(0)?,
            time: f(1)?,
            kinetic_energy: f(2)?,
            e1_energy: f(3)?,
            e2_energy: f(4)?,
            b3_energy: f(5)?,
            total_energy: f(6)?,
            energy_error: f(7)?,
            gauss_residual: f(8)?,
            picard_iters: u(9)?,
            sub_iters_mean: f(10)?,
        })
    }
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

/// Writes the header, then one flushed line per row.
pub struct CsvWriter {
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", csv_header())?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write_row(&mut self, row: &DiagnosticsRow) -> Result<()> {
        writeln!(self.out, "{}", row.to_csv())?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads a diagnostics CSV written by [`CsvWriter`].
pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != csv_header() {
        return Err(PicError::Parse(format!("unexpected header `{}`", header.trim())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(DiagnosticsRow::from_csv(&line).map_err(|e| PicError::Parse(format!("line {}: {e}", i + 2)))?);
    }
    Ok(rows)
}
