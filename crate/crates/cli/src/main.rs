use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dirgibbs_cli::config::{parse_law_list, parse_list, Experiment, RunConfig};
use dirgibbs_cli::experiments;
use dirgibbs_cli::output::format_medians;
use dirgibbs_cli::CliError;

/// Direction Gibbs and Metropolis-Hastings experiments.
#[derive(Parser)]
#[command(name = "dirgibbs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Truncated normal benchmark grid over dimensions and contrasts.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Also write the trace of replicate 0 of every cell.
        #[arg(long)]
        traces: bool,
    },
    /// Metropolis-Hastings on the skew-normal cases a-d.
    Skew {
        #[command(flatten)]
        common: Common,
        /// Cases to run, from a,b,c,d.
        #[arg(long)]
        cases: Option<String>,
        /// Replace the skewness vector of every case, e.g. `0,0`.
        #[arg(long, allow_hyphen_values = true)]
        shape: Option<String>,
        /// Minimum |overlap| between -e and an eigenvector of H(y) for
        /// h1/h2; 0 always takes the nearest eigenvector.
        #[arg(long)]
        eigen_match: Option<f64>,
        /// Target file (skew or gaussian family) instead of the cases.
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Mutual information of coordinate, eigen and random directions.
    Mi {
        #[command(flatten)]
        common: Common,
        /// Precision matrix CSV.
        #[arg(long)]
        precision: Option<PathBuf>,
        /// Target file; its precision is used.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Number of random sphere directions.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Gibbs sampling of a truncated normal posterior from a target file.
    Inverse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        traces: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Iterations per chain.
    #[arg(long)]
    iters: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicates per cell.
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Direction laws: coord, sphere, hstar, angular, h1, h2, h2=a,b.
    #[arg(long)]
    laws: Option<String>,
    /// Dimensions (benchmark).
    #[arg(long)]
    dims: Option<String>,
    /// Contrast exponents (benchmark).
    #[arg(long)]
    alphas: Option<String>,
    /// Leading iterations dropped before diagnostics.
    #[arg(long)]
    burnin: Option<usize>,
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(v) = self.iters {
            cfg.iterations = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.reps {
            cfg.replicates = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &self.laws {
            cfg.laws = parse_law_list(v)?;
        }
        if let Some(v) = &self.dims {
            cfg.dims = parse_list(v, "dimension")?;
        }
        if let Some(v) = &self.alphas {
            cfg.alphas = parse_list(v, "alpha")?;
        }
        if let Some(v) = self.burnin {
            cfg.burnin = v;
        }
        Ok(())
    }
}

fn build_config(cmd: Command) -> Result<RunConfig, CliError> {
    let cfg = match cmd {
        Command::Benchmark { common, traces } => {
            let mut cfg = RunConfig::new(Experiment::BenchmarkTruncated);
            common.apply(&mut cfg)?;
            cfg.traces = traces;
            cfg
        }
        Command::Skew {
            common,
            cases,
            shape,
            eigen_match,
            target,
        } => {
            let mut cfg = RunConfig::new(Experiment::Skew);
            common.apply(&mut cfg)?;
            if let Some(c) = cases {
                cfg.cases = parse_list(&c, "case")?;
            }
            if let Some(s) = shape {
                cfg.shape = Some(parse_list(&s, "shape value")?);
            }
            if let Some(m) = eigen_match {
                cfg.min_eigen_overlap = m;
            }
            cfg.target = target;
            cfg
        }
        Command::Mi {
            common,
            precision,
            target,
            draws,
        } => {
            let mut cfg = RunConfig::new(Experiment::MiTable);
            common.apply(&mut cfg)?;
            cfg.precision = precision;
            cfg.target = target;
            if let Some(d) = draws {
                cfg.draws = d;
            }
            cfg
        }
        Command::Inverse {
            common,
            target,
            traces,
        } => {
            let mut cfg = RunConfig::new(Experiment::Inverse);
            common.apply(&mut cfg)?;
            cfg.target = Some(target);
            cfg.traces = traces;
            cfg
        }
    };
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(cli.command).and_then(|cfg| experiments::run(&cfg));
    match result {
        Ok(report) => {
            if !report.medians.is_empty() {
                print!("{}", format_medians(&report.medians));
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dirgibbs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
