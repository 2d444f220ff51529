//! CSV outputs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dirgibbs::diagnostics::write_trace_csv;
use dirgibbs::ChainTrace;

use crate::CliError;

/// One replicate of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub run_id: usize,
    pub sampler: String,
    pub n: usize,
    pub alpha_or_case: String,
    pub seed: u64,
    pub iters: usize,
    pub accept_rate: f64,
    pub iat_max: f64,
}

impl SummaryRow {
    pub fn iat_per_dim(&self) -> f64 {
        self.iat_max / self.n as f64
    }
}

/// Medians over the replicates of one (cell, sampler) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub sampler: String,
    pub n: usize,
    pub alpha_or_case: String,
    pub reps: usize,
    pub accept_rate: f64,
    pub iat_max: f64,
    pub iat_per_dim: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Groups consecutive rows sharing (sampler, n, alpha_or_case) and takes
/// medians; rows must already be in grid order.
pub fn medians(rows: &[SummaryRow]) -> Vec<MedianRow> {
    let mut out: Vec<MedianRow> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = (&rows[i].sampler, rows[i].n, &rows[i].alpha_or_case);
        let j = rows[i..]
            .iter()
            .position(|r| (&r.sampler, r.n, &r.alpha_or_case) != key)
            .map_or(rows.len(), |p| i + p);
        let group = &rows[i..j];
        let pick = |f: fn(&SummaryRow) -> f64| median(&group.iter().map(f).collect::<Vec<_>>());
        out.push(MedianRow {
            sampler: rows[i].sampler.clone(),
            n: rows[i].n,
            alpha_or_case: rows[i].alpha_or_case.clone(),
            reps: group.len(),
            accept_rate: pick(|r| r.accept_rate),
            iat_max: pick(|r| r.iat_max),
            iat_per_dim: pick(SummaryRow::iat_per_dim),
        });
        i = j;
    }
    out
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_record([
        "run_id",
        "sampler",
        "n",
        "alpha_or_case",
        "seed",
        "iters",
        "accept_rate",
        "iat_max",
        "iat_per_dim",
    ])?;
    for r in rows {
        w.write_record([
            r.run_id.to_string(),
            r.sampler.clone(),
            r.n.to_string(),
            r.alpha_or_case.clone(),
            r.seed.to_string(),
            r.iters.to_string(),
            r.accept_rate.to_string(),
            r.iat_max.to_string(),
            r.iat_per_dim().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_medians(path: &Path, rows: &[MedianRow]) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_record([
        "sampler",
        "n",
        "alpha_or_case",
        "reps",
        "median_accept_rate",
        "median_iat_max",
        "median_iat_per_dim",
    ])?;
    for r in rows {
        w.write_record([
            r.sampler.clone(),
            r.n.to_string(),
            r.alpha_or_case.clone(),
            r.reps.to_string(),
            r.accept_rate.to_string(),
            r.iat_max.to_string(),
            r.iat_per_dim.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes any header plus string records.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &ChainTrace) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_trace_csv(trace, BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// `h2=1,9` becomes `h2-1-9`; safe in file names.
pub fn file_label(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '-' })
        .collect()
}

pub fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Plain-text table of medians for the terminal.
pub fn format_medians(rows: &[MedianRow]) -> String {
    let mut s = format!(
        "{:<10} {:>3} {:>8} {:>5} {:>8} {:>10} {:>10}\n",
        "sampler", "n", "cell", "reps", "accept", "iat_max", "iat/n"
    );
    for r in rows {
        s += &format!(
            "{:<10} {:>3} {:>8} {:>5} {:>8.4} {:>10.3} {:>10.3}\n",
            r.sampler, r.n, r.alpha_or_case, r.reps, r.accept_rate, r.iat_max, r.iat_per_dim
        );
    }
    s
}
