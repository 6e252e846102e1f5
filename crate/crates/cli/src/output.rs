//! CSV files with `#` header lines, and the JSON run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, Source};
use crate::CliError;

/// One output table, fully rendered before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file: impl Into<String>, columns: Vec<&'static str>) -> Self {
        Table {
            file: file.into(),
            header: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) -> &mut Self {
        self.header.push(line.into());
        self
    }

    pub fn render(&self, preamble: &[String]) -> String {
        let mut s = String::new();
        for line in preamble.iter().chain(&self.header) {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "# {}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Parameter lines shared by every file of a run.
pub fn preamble(cfg: &RunConfig) -> Vec<String> {
    let m = &cfg.model;
    let mut out = vec![
        format!("polaron {} (core {})", cfg.mode.name(), polaron_core::VERSION),
        format!(
            "n_sites={} n_ph_max={} boundary={:?} t0={:.12e} g={:.12e} lambda_eff={:.12e}",
            m.n_sites,
            m.n_ph_max,
            m.boundary,
            m.t0,
            m.g,
            m.lambda_eff()
        ),
    ];
    if let Source::Device(d) = cfg.source {
        out.push(format!(
            "phi_dc_over_pi={} delta_omega_over_2pi_mhz={} delta_theta_r={} ej_scale_over_2pi_mhz={}",
            d.phi_dc / std::f64::consts::PI,
            d.delta_omega_over_2pi,
            d.delta_theta_r,
            d.ej_scale_over_2pi
        ));
    }
    out
}

/// Writes every table and the manifest, one file at a time.
pub fn write_all(dir: &Path, tables: &[Table], preamble: &[String], manifest: &serde_json::Value) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(tables.len() + 1);
    for t in tables {
        let p = dir.join(&t.file);
        std::fs::write(&p, t.render(preamble))?;
        written.push(p);
    }
    let p = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.into()))?;
    text.push('\n');
    std::fs::write(&p, text)?;
    written.push(p);
    Ok(written)
}
