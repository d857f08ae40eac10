//! CSV series for offline plotting, plus the reader for sampled
//! propagator tables. Numbers are written in shortest round-trip form,
//! so files are byte-stable for a fixed config and seed.

use anyhow::{bail, Context, Result};
use std::path::Path;

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_rows(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

/// One row per anchor time: t, phi_value, arg_tau, certified.
pub fn phi_series(rows: &[(f64, f64, f64, bool)]) -> Result<String> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(t, phi, arg, cert)| vec![fmt(*t), fmt(*phi), fmt(*arg), cert.to_string()])
        .collect();
    write_rows(&["t", "phi_value", "arg_tau", "certified"], &body)
}

/// One row per start time: s, M.
pub fn m_vs_s(samples: &[(f64, f64)]) -> Result<String> {
    let body: Vec<Vec<String>> = samples.iter().map(|(s, m)| vec![fmt(*s), fmt(*m)]).collect();
    write_rows(&["s", "M"], &body)
}

/// One row per verified pair: t - s, measured norm, certified bound.
pub fn norm_vs_certificate(rows: &[(f64, f64, f64)]) -> Result<String> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(dt, measured, bound)| vec![fmt(*dt), fmt(*measured), fmt(*bound)])
        .collect();
    write_rows(&["t_minus_s", "measured_norm", "certified_bound"], &body)
}

/// Reads a sampled propagator table: header `t,s,entries...` with the
/// dim x dim entries in row-major order.
pub fn read_table(path: &Path) -> Result<Vec<(f64, f64, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open table {}", path.display()))?;
    let header = reader.headers().context("reading table header")?.clone();
    if header.len() < 3 || &header[0] != "t" || &header[1] != "s" {
        bail!("table header must start with `t,s` followed by propagator entries");
    }
    let entries = header.len() - 2;
    let dim = (entries as f64).sqrt().round() as usize;
    if dim * dim != entries {
        bail!("table has {entries} entry columns, which is not a square dimension");
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("table row {}", line + 2))?;
        if record.len() != header.len() {
            bail!("table row {} has {} fields, expected {}", line + 2, record.len(), header.len());
        }
        let mut nums = Vec::with_capacity(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .with_context(|| format!("table row {}: bad number `{field}`", line + 2))?;
            nums.push(v);
        }
        let t = nums[0];
        let s = nums[1];
        rows.push((t, s, nums[2..].to_vec()));
    }
    if rows.is_empty() {
        bail!("table {} has no data rows", path.display());
    }
    Ok(rows)
}
