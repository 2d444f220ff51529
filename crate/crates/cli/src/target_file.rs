//! Target specification files.
//!
//! One `key = value` pair per line; `#` starts a comment. `family` selects
//! the target; matrix and vector values are CSV file paths resolved against
//! the directory of the target file, except `alpha` and `location`, which are
//! inline comma lists.
//!
//! ```text
//! family = truncated          # gaussian | truncated | skew | inverse-posterior
//! precision = A.csv
//! mean = mu.csv
//! lower = positive            # or a vector file; omitted means unbounded
//! ```
//!
//! `skew` takes `precision` or `covariance`, `alpha` and optionally
//! `location`. `inverse-posterior` takes `forward`, `noise` (diagonal of the
//! noise precision), `m`, `ybar`, `prior_precision`, `prior_mean` and
//! `bounds = positive | none`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dirgibbs::io::{read_matrix_csv, read_sym_matrix_csv, read_vector_csv};
use dirgibbs::targets::make_inverse_problem_posterior;
use dirgibbs::{
    GaussianTarget, Matrix, SkewNormalLogisticTarget, SymMatrix, TruncatedGaussianTarget,
};

use crate::config::parse_list;
use crate::CliError;

#[derive(Debug, Clone)]
pub enum LoadedTarget {
    Gaussian(GaussianTarget),
    Truncated(TruncatedGaussianTarget),
    Skew(SkewNormalLogisticTarget),
    /// Posterior of the linear inverse problem, already assembled.
    InversePosterior(TruncatedGaussianTarget),
}

impl LoadedTarget {
    pub fn family(&self) -> &'static str {
        match self {
            Self::Gaussian(_) => "gaussian",
            Self::Truncated(_) => "truncated",
            Self::Skew(_) => "skew",
            Self::InversePosterior(_) => "inverse-posterior",
        }
    }

    pub fn precision(&self) -> &SymMatrix {
        match self {
            Self::Gaussian(t) => t.precision(),
            Self::Truncated(t) | Self::InversePosterior(t) => t.precision(),
            Self::Skew(t) => t.precision(),
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries {
    path: PathBuf,
    entries: BTreeMap<String, Entry>,
}

impl Entries {
    fn err(&self, line: Option<usize>, msg: impl std::fmt::Display) -> CliError {
        match line {
            Some(l) => CliError::Config(format!("{}:{l}: {msg}", self.path.display())),
            None => CliError::Config(format!("{}: {msg}", self.path.display())),
        }
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<Entry, CliError> {
        self.take(key)
            .ok_or_else(|| self.err(None, format!("missing key {key:?}")))
    }

    fn resolve(&self, e: &Entry) -> PathBuf {
        let dir = self.path.parent().unwrap_or(Path::new("."));
        dir.join(&e.value)
    }

    fn sym_matrix(&mut self, key: &str) -> Result<SymMatrix, CliError> {
        let e = self.require(key)?;
        read_sym_matrix_csv(self.resolve(&e)).map_err(|err| self.err(Some(e.line), err))
    }

    fn matrix(&mut self, key: &str) -> Result<Matrix, CliError> {
        let e = self.require(key)?;
        read_matrix_csv(self.resolve(&e)).map_err(|err| self.err(Some(e.line), err))
    }

    fn vector(&mut self, key: &str) -> Result<Vec<f64>, CliError> {
        let e = self.require(key)?;
        read_vector_csv(self.resolve(&e)).map_err(|err| self.err(Some(e.line), err))
    }

    fn inline(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => parse_list::<f64>(&e.value, key)
                .map(Some)
                .map_err(|err| self.err(Some(e.line), err)),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.entries.iter().next() {
            Some((key, e)) => Err(self.err(Some(e.line), format!("unknown key {key:?}"))),
            None => Ok(()),
        }
    }
}

fn parse_entries(path: &Path, text: &str) -> Result<Entries, CliError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}:{line}: expected key = value",
                path.display()
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(CliError::Config(format!(
                "{}:{line}: empty key or value",
                path.display()
            )));
        }
        if let Some(prev) = entries.insert(key.clone(), Entry { line, value }) {
            return Err(CliError::Config(format!(
                "{}:{line}: key {key:?} already set on line {}",
                path.display(),
                prev.line
            )));
        }
    }
    Ok(Entries {
        path: path.to_path_buf(),
        entries,
    })
}

/// Reads and assembles the target described by the file at `path`.
pub fn load_target(path: &Path) -> Result<LoadedTarget, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_target(path, &text)
}

/// As [`load_target`] with the file contents given; `path` locates the
/// referenced CSV files and labels errors.
pub fn parse_target(path: &Path, text: &str) -> Result<LoadedTarget, CliError> {
    let mut entries = parse_entries(path, text)?;
    let family = entries.require("family")?;
    let build = |entries: &Entries, r: dirgibbs::Result<LoadedTarget>| {
        r.map_err(|e| entries.err(Some(family.line), format!("cannot build target: {e}")))
    };
    let target = match family.value.as_str() {
        "gaussian" => {
            let precision = entries.sym_matrix("precision")?;
            let mean = entries.vector("mean")?;
            build(&entries, GaussianTarget::new(precision, mean).map(LoadedTarget::Gaussian))?
        }
        "truncated" => {
            let precision = entries.sym_matrix("precision")?;
            let mean = entries.vector("mean")?;
            let lower = match entries.take("lower") {
                None => vec![f64::NEG_INFINITY; mean.len()],
                Some(e) if e.value == "positive" => vec![0.0; mean.len()],
                Some(e) => read_vector_csv(entries.resolve(&e))
                    .map_err(|err| entries.err(Some(e.line), err))?,
            };
            build(
                &entries,
                TruncatedGaussianTarget::new(precision, mean, lower).map(LoadedTarget::Truncated),
            )?
        }
        "skew" => {
            let precision = match (entries.take("precision"), entries.take("covariance")) {
                (Some(e), None) => read_sym_matrix_csv(entries.resolve(&e))
                    .map_err(|err| entries.err(Some(e.line), err))?,
                (None, Some(e)) => {
                    let cov = read_sym_matrix_csv(entries.resolve(&e))
                        .map_err(|err| entries.err(Some(e.line), err))?;
                    build(
                        &entries,
                        SkewNormalLogisticTarget::from_covariance(&cov, vec![0.0; cov.dim()])
                            .map(LoadedTarget::Skew),
                    )?
                    .precision()
                    .clone()
                }
                _ => return Err(entries.err(None, "skew needs exactly one of precision, covariance")),
            };
            let alpha = entries
                .inline("alpha")?
                .ok_or_else(|| entries.err(None, "missing key \"alpha\""))?;
            let location = entries
                .inline("location")?
                .unwrap_or_else(|| vec![0.0; precision.dim()]);
            build(
                &entries,
                SkewNormalLogisticTarget::new(precision, alpha, location).map(LoadedTarget::Skew),
            )?
        }
        "inverse-posterior" => {
            let forward = entries.matrix("forward")?;
            let noise = entries.vector("noise")?;
            let m_entry = entries.require("m")?;
            let m_count: usize = m_entry
                .value
                .parse()
                .map_err(|_| entries.err(Some(m_entry.line), "m must be a positive integer"))?;
            let ybar = entries.vector("ybar")?;
            let prior_precision = entries.sym_matrix("prior_precision")?;
            let prior_mean = entries.vector("prior_mean")?;
            let unbounded = match entries.take("bounds") {
                None => false,
                Some(e) if e.value == "positive" => false,
                Some(e) if e.value == "none" => true,
                Some(e) => {
                    return Err(entries.err(Some(e.line), "bounds must be positive or none"));
                }
            };
            let post = make_inverse_problem_posterior(
                &forward,
                &noise,
                m_count,
                &ybar,
                &prior_precision,
                &prior_mean,
            )
            .and_then(|t| {
                if unbounded {
                    let n = t.mean().len();
                    TruncatedGaussianTarget::new(
                        t.precision().clone(),
                        t.mean().to_vec(),
                        vec![f64::NEG_INFINITY; n],
                    )
                } else {
                    Ok(t)
                }
            })
            .map(LoadedTarget::InversePosterior);
            build(&entries, post)?
        }
        other => {
            return Err(entries.err(
                Some(family.line),
                format!("unknown family {other:?} (gaussian, truncated, skew, inverse-posterior)"),
            ))
        }
    };
    entries.finish()?;
    Ok(target)
}
