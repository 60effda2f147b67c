//! Diagnostics CSV emission and the key=value run summary.

use bsq_core::DiagnosticsRecord;
use std::io::Write;
use std::path::Path;

pub const CSV_HEADER: &str = "t,u_l2,u_h1,w_l2,min_w,mean_u,mean_w,entropy_q,orlicz_w,energy_e,dissipation_u,dissipation_w,sqrtw_h1,envelope,energy_law_residual,u_h2,w_h2";

/// Fills the centered-difference energy-law residual
/// `dE/dt + ||u||_{H^1}^2/2 + int w_x^2/w` at interior rows.
pub fn fill_energy_law_residuals(records: &mut [DiagnosticsRecord]) {
    for i in 1..records.len().saturating_sub(1) {
        let dt = records[i + 1].t - records[i - 1].t;
        if dt <= 0.0 {
            continue;
        }
        let dedt = (records[i + 1].energy_e - records[i - 1].energy_e) / dt;
        let r = &records[i];
        let residual = dedt + 0.5 * r.u_h1 * r.u_h1 + r.dissipation_w;
        records[i].energy_law_residual = Some(residual);
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the diagnostics table, one row per output time, 17 significant
/// digits. The residual column is empty where it is not computable.
pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let residual = r.energy_law_residual.map(fmt).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.t),
            fmt(r.u_l2),
            fmt(r.u_h1),
            fmt(r.w_l2),
            fmt(r.min_w),
            fmt(r.mean_u),
            fmt(r.mean_w),
            fmt(r.entropy_q),
            fmt(r.orlicz_w),
            fmt(r.energy_e),
            fmt(r.dissipation_u),
            fmt(r.dissipation_w),
            fmt(r.sqrtw_h1),
            fmt(r.envelope),
            residual,
            fmt(r.u_h2),
            fmt(r.w_h2),
        )?;
    }
    out.flush()
}

/// Ordered key=value run summary with an appended breach list. The exit
/// status of a scenario is nonzero exactly when `breaches` is nonempty.
#[derive(Debug, Default)]
pub struct Summary {
    entries: Vec<(String, String)>,
    breaches: Vec<String>,
}

impl Summary {
    pub fn new(scenario: &str) -> Self {
        let mut s = Summary::default();
        s.set("scenario", scenario);
        s
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.entries.push((key.to_string(), fmt(value)));
    }

    pub fn breach(&mut self, description: impl Into<String>) {
        self.breaches.push(description.into());
    }

    pub fn breach_count(&self) -> usize {
        self.breaches.len()
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (key, value) in &self.entries {
            writeln!(out, "{key}={value}")?;
        }
        writeln!(out, "breaches={}", self.breaches.len())?;
        for (i, b) in self.breaches.iter().enumerate() {
            writeln!(out, "breach_{i}={b}")?;
        }
        out.flush()
    }
}
