//! Run configuration and the command-line value vocabularies.

use std::path::PathBuf;
use std::str::FromStr;

use dirgibbs::DirectionLaw;

use crate::CliError;

/// Shortest chain (after burn-in) accepted for IAT estimates.
pub const MIN_IAT_ITERATIONS: usize = 1000;
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    BenchmarkTruncated,
    Skew,
    MiTable,
    Inverse,
}

impl Experiment {
    /// File-name prefix of the experiment's outputs.
    pub fn prefix(self) -> &'static str {
        match self {
            Self::BenchmarkTruncated => "benchmark",
            Self::Skew => "skew",
            Self::MiTable => "mi",
            Self::Inverse => "inverse",
        }
    }

    pub fn default_iterations(self) -> usize {
        match self {
            Self::BenchmarkTruncated => 50_000,
            _ => 10_000,
        }
    }

    pub fn default_laws(self) -> &'static str {
        match self {
            Self::BenchmarkTruncated => "coord,sphere,angular,hstar",
            Self::Skew => "angular,hstar,h2",
            Self::MiTable => "",
            Self::Inverse => "coord,sphere,angular",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub dims: Vec<usize>,
    pub alphas: Vec<f64>,
    pub laws: Vec<DirectionLaw>,
    pub iterations: usize,
    pub master_seed: u64,
    pub replicates: usize,
    pub burnin: usize,
    pub out: PathBuf,
    /// Skew case labels (`a`..`d`).
    pub cases: Vec<char>,
    /// Replaces the skewness vector of every skew case.
    pub shape: Option<Vec<f64>>,
    pub min_eigen_overlap: f64,
    pub target: Option<PathBuf>,
    pub precision: Option<PathBuf>,
    /// Random sphere directions tabulated by the MI experiment.
    pub draws: usize,
    /// Also write the trace of the first replicate of every cell.
    pub traces: bool,
}

impl RunConfig {
    /// Defaults for `experiment`: full benchmark grid, four skew cases,
    /// ten replicates, master seed 1.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            dims: vec![2, 3, 5, 10, 15, 20],
            alphas: vec![0.0, 5.0, 10.0, 20.0],
            laws: parse_law_list(experiment.default_laws()).unwrap_or_default(),
            iterations: experiment.default_iterations(),
            master_seed: 1,
            replicates: 10,
            burnin: 0,
            out: PathBuf::from("out"),
            cases: vec!['a', 'b', 'c', 'd'],
            shape: None,
            min_eigen_overlap: 0.0,
            target: None,
            precision: None,
            draws: 100,
            traces: false,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let config = |msg: String| Err(CliError::Config(msg));
        if self.experiment != Experiment::MiTable {
            if self.iterations < self.burnin + MIN_IAT_ITERATIONS {
                return config(format!(
                    "--iters must leave at least {MIN_IAT_ITERATIONS} iterations after burn-in \
                     (iters {}, burnin {})",
                    self.iterations, self.burnin
                ));
            }
            if self.replicates == 0 {
                return config("--reps must be at least 1".into());
            }
            if self.laws.is_empty() {
                return config("--laws is empty".into());
            }
        }
        match self.experiment {
            Experiment::BenchmarkTruncated => {
                if self.dims.is_empty() || self.alphas.is_empty() {
                    return config("--dims and --alphas must not be empty".into());
                }
                if let Some(n) = self.dims.iter().find(|n| !(2..=MAX_DIM).contains(*n)) {
                    return config(format!("dimension {n} outside 2..={MAX_DIM}"));
                }
                if let Some(a) = self.alphas.iter().find(|a| !a.is_finite() || **a < 0.0) {
                    return config(format!("alpha {a} must be finite and non-negative"));
                }
            }
            Experiment::Skew => {
                for law in &self.laws {
                    if !matches!(
                        law,
                        DirectionLaw::HStar
                            | DirectionLaw::Angular
                            | DirectionLaw::H1
                            | DirectionLaw::H2 { .. }
                    ) {
                        return config(format!(
                            "law {law} is not available for skew runs (use hstar, angular, h1, h2)"
                        ));
                    }
                }
                if self.target.is_none() {
                    if self.cases.is_empty() {
                        return config("--cases is empty".into());
                    }
                    if let Some(c) = self.cases.iter().find(|c| !('a'..='d').contains(*c)) {
                        return config(format!("unknown skew case {c:?} (use a, b, c, d)"));
                    }
                    if let Some(s) = &self.shape {
                        if s.len() != 2 {
                            return config(format!("--shape needs 2 values, got {}", s.len()));
                        }
                    }
                }
                if !(0.0..=1.0).contains(&self.min_eigen_overlap) {
                    return config("--eigen-match must lie in [0, 1]".into());
                }
            }
            Experiment::MiTable => {
                if self.precision.is_none() && self.target.is_none() {
                    return config("mi needs --precision FILE or --target FILE".into());
                }
            }
            Experiment::Inverse => {
                if self.target.is_none() {
                    return config("inverse needs --target FILE".into());
                }
            }
        }
        Ok(())
    }
}

/// Parses a comma-separated list, naming `what` in errors.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| CliError::Config(format!("invalid {what} {t:?}")))
        })
        .collect()
}

/// Parses `coord,sphere,hstar,angular,h1,h2,h2=a,b`. The number following an
/// `h2=a` item is its second Beta parameter, not a law of its own.
pub fn parse_law_list(s: &str) -> Result<Vec<DirectionLaw>, CliError> {
    let tokens: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let mut laws = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut item = tokens[i].to_string();
        if item.starts_with("h2=")
            && !item.contains(':')
            && i + 1 < tokens.len()
            && tokens[i + 1].parse::<f64>().is_ok()
        {
            item = format!("{item},{}", tokens[i + 1]);
            i += 1;
        }
        let law = item
            .parse::<DirectionLaw>()
            .map_err(|e| CliError::Config(format!("--laws: {e}")))?;
        if laws.contains(&law) {
            return Err(CliError::Config(format!("--laws lists {law} twice")));
        }
        laws.push(law);
        i += 1;
    }
    Ok(laws)
}
