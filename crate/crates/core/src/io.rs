//! File formats: trajectory and report CSVs, JSON reports and run metadata.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a CSV
//! read back parses to the identical bits.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::{ConvergenceReport, MonitorRecord};
use crate::limit::DiscriminatorReport;
use crate::spectral::SpectralField;
use crate::wave::Trajectory;

pub fn trajectory_header(n_modes: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n_modes).map(|j| format!("c{j}")));
    h.extend((1..=n_modes).map(|j| format!("d{j}")));
    h.extend(
        ["norm_h", "psi", "phi", "h2norm", "hs_norm_sq"]
            .iter()
            .map(|s| s.to_string()),
    );
    h
}

pub fn write_trajectory_csv<W: Write>(tr: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(tr.n_modes()))?;
    for ((t, z), d) in tr.times.iter().zip(&tr.states).zip(&tr.diagnostics) {
        let mut row = vec![t.to_string()];
        row.extend(z.u.coeffs().iter().map(f64::to_string));
        row.extend(z.v.coeffs().iter().map(f64::to_string));
        row.extend(
            [d.norm_h, d.psi, d.phi, d.h2norm, d.hs_norm_sq]
                .iter()
                .map(f64::to_string),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory_csv(tr: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    write_trajectory_csv(tr, BufWriter::new(File::create(path)?))
}

/// A field as JSON: `{"n_modes": N, "coeffs": [...]}`.
pub fn field_to_json(x: &SpectralField) -> Result<String> {
    Ok(serde_json::to_string(x)?)
}

pub fn field_from_json(s: &str) -> Result<SpectralField> {
    Ok(serde_json::from_str(s)?)
}

/// A field as a CSV header `c1..cN` and one row.
pub fn field_to_csv(x: &SpectralField) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record((1..=x.n_modes()).map(|j| format!("c{j}")))?;
    w.write_record(x.coeffs().iter().map(f64::to_string))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn field_from_csv(s: &str) -> Result<SpectralField> {
    let mut r = csv::Reader::from_reader(s.as_bytes());
    let row = r
        .records()
        .next()
        .ok_or_else(|| Error::Io("field CSV has no data row".into()))??;
    let coeffs = row
        .iter()
        .map(|c| {
            c.parse::<f64>()
                .map_err(|e| Error::Io(format!("bad coefficient {c:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralField::from_coeffs(coeffs)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per `(μ, replica)`.
pub fn write_sweep_csv<W: Write>(rep: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["mu", "replica", "l4h1_error", "sup_R_mu"];
    header.extend(MonitorRecord::NAMES);
    header.push("excluded_reason");
    w.write_record(&header)?;
    for r in &rep.rows {
        let mut row = vec![
            r.mu.to_string(),
            r.replica.to_string(),
            opt(r.l4h1_error),
            opt(r.sup_r_mu),
        ];
        match r.monitors {
            Some(m) => row.extend(m.as_array().iter().map(f64::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.push(r.excluded_reason.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-μ summary: the convergence curve for plotting.
pub fn write_sweep_summary_csv<W: Write>(rep: &ConvergenceReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "mu",
        "wave_dt",
        "included",
        "excluded",
        "l4h1_mean",
        "l4h1_stderr",
        "l4h1_q10",
        "l4h1_q50",
        "l4h1_q90",
        "sup_R_mu_mean",
        "sup_R_mu_stderr",
    ];
    header.extend(MonitorRecord::NAMES);
    w.write_record(&header)?;
    for s in &rep.per_mu {
        let mut row = vec![
            s.mu.to_string(),
            s.wave_dt.to_string(),
            s.included.to_string(),
            s.excluded.to_string(),
            s.l4h1_error.mean.to_string(),
            opt(s.l4h1_error.stderr),
            s.l4h1_quantiles[0].to_string(),
            s.l4h1_quantiles[1].to_string(),
            s.l4h1_quantiles[2].to_string(),
            s.sup_r_mu.mean.to_string(),
            opt(s.sup_r_mu.stderr),
        ];
        row.extend(s.monitors.as_array().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Gap against its first-order prediction at every checkpoint.
pub fn write_discriminator_csv<W: Write>(rep: &DiscriminatorReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "mean_gap", "stderr", "predicted_first_order_gap", "distinguished"])?;
    for r in &rep.records {
        w.write_record([
            r.t.to_string(),
            r.mean_gap.to_string(),
            opt(r.stderr),
            r.predicted_first_order_gap.to_string(),
            r.distinguished.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// An output file and its sha256.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

/// `run.json`: everything needed to re-run and check a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub version: String,
    pub scheme: String,
    pub seed: u64,
    pub replica: Option<u64>,
    pub config_file: String,
    pub config_hash: String,
    pub config: String,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputDigest>,
}
