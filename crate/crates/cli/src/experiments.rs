//! The four experiment grids.

use std::path::PathBuf;

use dirgibbs::directions::{mutual_information_constant, sample_uniform_sphere};
use dirgibbs::kernels::MhOptions;
use dirgibbs::linalg::{
    build_benchmark_precision, quadratic_form, random_orthonormal, sym_eigen,
};
use dirgibbs::{
    acceptance_rate, iat_report, run_gibbs_truncated, run_mh, ChainTrace, DirectionLaw,
    SkewNormalLogisticTarget, SymMatrix, TargetDensity, TruncatedGaussianTarget, UnitDirection,
};
use rayon::prelude::*;

use crate::config::{Experiment, RunConfig};
use crate::output::{
    file_label, medians, write_medians, write_summary, write_table, write_trace, MedianRow,
    SummaryRow,
};
use crate::seeding::{label_tag, rng_from, run_seed};
use crate::target_file::{load_target, LoadedTarget};
use crate::CliError;

/// Skewness vector and covariance `[[1, ρ], [ρ, 1]]` of the four skew cases.
pub const SKEW_CASES: [(char, [f64; 2], f64); 4] = [
    ('a', [-1.0, -1.0], 0.5),
    ('b', [-0.5, 5.0], 0.9),
    ('c', [-5.0, 5.0], 0.9),
    ('d', [-10.0, -10.0], 0.5),
];

/// What an experiment produced: summary rows in grid order, their medians
/// and the files written.
#[derive(Debug, Clone)]
pub struct Report {
    pub rows: Vec<SummaryRow>,
    pub medians: Vec<MedianRow>,
    pub files: Vec<PathBuf>,
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::BenchmarkTruncated => run_benchmark_truncated(cfg),
        Experiment::Skew => run_skew(cfg),
        Experiment::MiTable => run_mi_table(cfg),
        Experiment::Inverse => run_inverse(cfg),
    }
}

/// One chain of a grid.
struct Job<'a> {
    cell: usize,
    law: &'a DirectionLaw,
    replicate: usize,
}

struct Finished {
    row: SummaryRow,
    trace: Option<ChainTrace>,
}

fn summarize(
    cfg: &RunConfig,
    mut trace: ChainTrace,
    law: &DirectionLaw,
    n: usize,
    cell: String,
    seed: u64,
    keep: bool,
) -> Result<Finished, CliError> {
    trace.discard_burnin(cfg.burnin);
    trace.meta_mut().seed = Some(seed);
    let report = iat_report(&trace)?;
    Ok(Finished {
        row: SummaryRow {
            run_id: 0,
            sampler: law.label(),
            n,
            alpha_or_case: cell,
            seed,
            iters: cfg.iterations,
            accept_rate: acceptance_rate(&trace),
            iat_max: report.aggregate,
        },
        trace: keep.then_some(trace),
    })
}

/// Runs the jobs in parallel, then numbers rows and writes everything in
/// job order.
fn finish(
    cfg: &RunConfig,
    results: Vec<Result<Finished, CliError>>,
    extra: Vec<PathBuf>,
) -> Result<Report, CliError> {
    let mut rows = Vec::with_capacity(results.len());
    let mut files = Vec::new();
    let prefix = cfg.experiment.prefix();
    for (i, res) in results.into_iter().enumerate() {
        let mut done = res?;
        done.row.run_id = i;
        if let Some(trace) = done.trace {
            let path = cfg.out.join(format!(
                "{prefix}_trace_n{}_{}_{}.csv",
                done.row.n,
                file_label(&done.row.alpha_or_case),
                file_label(&done.row.sampler)
            ));
            write_trace(&path, &trace)?;
            files.push(path);
        }
        rows.push(done.row);
    }
    let med = medians(&rows);
    let summary = cfg.out.join(format!("{prefix}_summary.csv"));
    let median_file = cfg.out.join(format!("{prefix}_medians.csv"));
    write_summary(&summary, &rows)?;
    write_medians(&median_file, &med)?;
    let mut all = vec![summary, median_file];
    all.extend(files);
    all.extend(extra);
    Ok(Report {
        rows,
        medians: med,
        files: all,
    })
}

/// Precision of a benchmark cell; shared by every law of the same
/// (n, α, replicate) so laws are compared on the same matrices.
pub fn benchmark_precision(master: u64, n: usize, alpha: f64, replicate: usize) -> SymMatrix {
    let seed = run_seed(master, n, alpha.to_bits(), label_tag("precision"), replicate);
    let p = random_orthonormal(n, &mut rng_from(seed));
    build_benchmark_precision(n, alpha, &p)
}

/// Truncated normal benchmark: precision with eigenvalues `i^(2α/n)` in a
/// random basis, mean `(√(1/n), …)`, support `x ≥ 0`, started at the mean.
pub fn run_benchmark_truncated(cfg: &RunConfig) -> Result<Report, CliError> {
    let cells: Vec<(usize, f64)> = cfg
        .dims
        .iter()
        .flat_map(|&n| cfg.alphas.iter().map(move |&a| (n, a)))
        .collect();
    let jobs = grid_jobs(cells.len(), &cfg.laws, cfg.replicates);
    let results: Vec<_> = jobs
        .par_iter()
        .map(|job| {
            let (n, alpha) = cells[job.cell];
            let a = benchmark_precision(cfg.master_seed, n, alpha, job.replicate);
            let mu = vec![(1.0 / n as f64).sqrt(); n];
            let target = TruncatedGaussianTarget::positive(a, mu.clone())?;
            let seed = run_seed(
                cfg.master_seed,
                n,
                alpha.to_bits(),
                label_tag(&job.law.label()),
                job.replicate,
            );
            let trace =
                run_gibbs_truncated(&target, job.law, mu, cfg.iterations, &mut rng_from(seed))?;
            summarize(cfg, trace, job.law, n, alpha.to_string(), seed, cfg.traces && job.replicate == 0)
        })
        .collect();
    finish(cfg, results, Vec::new())
}

fn grid_jobs(cells: usize, laws: &[DirectionLaw], reps: usize) -> Vec<Job<'_>> {
    let mut jobs = Vec::with_capacity(cells * laws.len() * reps);
    for cell in 0..cells {
        for law in laws {
            for replicate in 0..reps {
                jobs.push(Job {
                    cell,
                    law,
                    replicate,
                });
            }
        }
    }
    jobs
}

pub fn skew_case_target(case: char, shape: Option<&[f64]>) -> Result<SkewNormalLogisticTarget, CliError> {
    let (_, alpha, rho) = SKEW_CASES
        .iter()
        .find(|c| c.0 == case)
        .ok_or_else(|| CliError::Config(format!("unknown skew case {case:?}")))?;
    let cov = SymMatrix::from_rows(&[vec![1.0, *rho], vec![*rho, 1.0]])?;
    let alpha = shape.map_or_else(|| alpha.to_vec(), <[f64]>::to_vec);
    Ok(SkewNormalLogisticTarget::from_covariance(&cov, alpha)?)
}

enum SkewTarget {
    Skew(SkewNormalLogisticTarget),
    Gaussian(dirgibbs::GaussianTarget),
}

impl SkewTarget {
    fn dim(&self) -> usize {
        match self {
            Self::Skew(t) => t.dim(),
            Self::Gaussian(t) => t.dim(),
        }
    }
}

/// Metropolis–Hastings chains on the skew cases (or a target file), from
/// the origin. The first replicate of every (case, law) pair is traced.
pub fn run_skew(cfg: &RunConfig) -> Result<Report, CliError> {
    let targets: Vec<(String, SkewTarget)> = match &cfg.target {
        Some(path) => {
            let t = match load_target(path)? {
                LoadedTarget::Skew(t) => SkewTarget::Skew(t),
                LoadedTarget::Gaussian(t) => SkewTarget::Gaussian(t),
                other => {
                    return Err(CliError::Config(format!(
                        "{}: skew runs need a skew or gaussian target, got {}",
                        path.display(),
                        other.family()
                    )))
                }
            };
            vec![("file".to_string(), t)]
        }
        None => cfg
            .cases
            .iter()
            .map(|&c| Ok((c.to_string(), SkewTarget::Skew(skew_case_target(c, cfg.shape.as_deref())?))))
            .collect::<Result<_, CliError>>()?,
    };
    for (_, t) in &targets {
        if t.dim() != 2 && cfg.laws.contains(&DirectionLaw::HStar) {
            return Err(CliError::Config(format!(
                "hstar Metropolis-Hastings needs dimension 2, target has {}",
                t.dim()
            )));
        }
    }
    let opts = MhOptions {
        min_eigen_overlap: cfg.min_eigen_overlap,
    };
    let jobs = grid_jobs(targets.len(), &cfg.laws, cfg.replicates);
    let results: Vec<_> = jobs
        .par_iter()
        .map(|job| {
            let (label, target) = &targets[job.cell];
            let n = target.dim();
            // case letter, so a case keeps its streams when run on its own
            let key = label.chars().next().filter(|_| label.len() == 1).map_or(0, u64::from);
            let seed = run_seed(cfg.master_seed, n, key, label_tag(&job.law.label()), job.replicate);
            let mut rng = rng_from(seed);
            let x0 = vec![0.0; n];
            let trace = match target {
                SkewTarget::Skew(t) => run_mh(t, job.law, opts, x0, cfg.iterations, &mut rng)?,
                SkewTarget::Gaussian(t) => run_mh(t, job.law, opts, x0, cfg.iterations, &mut rng)?,
            };
            summarize(cfg, trace, job.law, n, label.clone(), seed, job.replicate == 0)
        })
        .collect();
    finish(cfg, results, Vec::new())
}

fn load_precision(cfg: &RunConfig) -> Result<SymMatrix, CliError> {
    if let Some(path) = &cfg.precision {
        return dirgibbs::io::read_sym_matrix_csv(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    let path = cfg.target.as_ref().expect("validated");
    Ok(load_target(path)?.precision().clone())
}

/// One row of the mutual-information table.
#[derive(Debug, Clone, PartialEq)]
pub struct MiRow {
    pub kind: &'static str,
    pub index: usize,
    pub quad_form: f64,
    /// `I_e − C₁ = ½ log eᵀAe`.
    pub mi_minus_c1: f64,
    pub argmin: bool,
}

/// Mutual information of coordinate, eigen and random sphere directions,
/// relative to the constant `C₁`. Returns the rows and `C₁`.
pub fn mi_table(a: &SymMatrix, draws: usize, seed: u64) -> Result<(Vec<MiRow>, f64), CliError> {
    let n = a.dim();
    let c1 = mutual_information_constant(a)?;
    let mut rows = Vec::new();
    let mut push = |kind, index, e: &[f64]| -> Result<(), CliError> {
        let q = quadratic_form(e, a)?;
        rows.push(MiRow {
            kind,
            index,
            quad_form: q,
            mi_minus_c1: 0.5 * q.ln(),
            argmin: false,
        });
        Ok(())
    };
    for i in 0..n {
        push("coord", i + 1, UnitDirection::axis(n, i).as_slice())?;
    }
    let eig = sym_eigen(a)?;
    let first_eigen = n;
    for k in 0..n {
        push("eigen", k + 1, &eig.vector(k))?;
    }
    let mut rng = rng_from(seed);
    for j in 0..draws {
        push("sphere", j + 1, sample_uniform_sphere(n, &mut rng).as_slice())?;
    }
    let best = (first_eigen..first_eigen + n)
        .min_by(|&i, &j| rows[i].quad_form.total_cmp(&rows[j].quad_form))
        .expect("n ≥ 1");
    rows[best].argmin = true;
    Ok((rows, c1))
}

pub fn run_mi_table(cfg: &RunConfig) -> Result<Report, CliError> {
    let a = load_precision(cfg)?;
    let seed = run_seed(cfg.master_seed, a.dim(), 0, label_tag("mi"), 0);
    let (rows, c1) = mi_table(&a, cfg.draws, seed)?;
    let path = cfg.out.join("mi_table.csv");
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.kind.to_string(),
                r.index.to_string(),
                r.quad_form.to_string(),
                r.mi_minus_c1.to_string(),
                u8::from(r.argmin).to_string(),
            ]
        })
        .collect();
    write_table(
        &path,
        &["kind", "index", "quad_form", "mi_minus_c1", "argmin"],
        &records,
    )?;
    println!("C1 = {c1}");
    Ok(Report {
        rows: Vec::new(),
        medians: Vec::new(),
        files: vec![path],
    })
}

/// Feasible start: the mean where it is inside the support, otherwise one
/// conditional sd above the bound.
fn start_point(t: &TruncatedGaussianTarget) -> Vec<f64> {
    let lower = t.lower_bounds().unwrap_or(&[]);
    t.mean()
        .iter()
        .enumerate()
        .map(|(i, &m)| match lower.get(i) {
            Some(&lb) if lb.is_finite() && m <= lb => lb + 1.0 / t.precision().get(i, i).sqrt(),
            _ => m,
        })
        .collect()
}

/// Gibbs sampling of a truncated normal posterior read from a target file.
/// Writes the summary plus per-coordinate moments of every chain.
pub fn run_inverse(cfg: &RunConfig) -> Result<Report, CliError> {
    let path = cfg.target.as_ref().expect("validated");
    let target = match load_target(path)? {
        LoadedTarget::InversePosterior(t) | LoadedTarget::Truncated(t) => t,
        LoadedTarget::Gaussian(g) => {
            let n = g.mean().len();
            TruncatedGaussianTarget::new(
                g.precision().clone(),
                g.mean().to_vec(),
                vec![f64::NEG_INFINITY; n],
            )?
        }
        other => {
            return Err(CliError::Config(format!(
                "{}: inverse runs need a gaussian, truncated or inverse-posterior target, got {}",
                path.display(),
                other.family()
            )))
        }
    };
    let n = target.dim();
    let x0 = start_point(&target);
    let jobs = grid_jobs(1, &cfg.laws, cfg.replicates);
    let results: Vec<_> = jobs
        .par_iter()
        .map(|job| {
            let seed = run_seed(cfg.master_seed, n, 0, label_tag(&job.law.label()), job.replicate);
            let trace = run_gibbs_truncated(
                &target,
                job.law,
                x0.clone(),
                cfg.iterations,
                &mut rng_from(seed),
            )?;
            let mut kept = trace.clone();
            kept.discard_burnin(cfg.burnin);
            let (mean, cov) = dirgibbs::diagnostics::empirical_moments(&kept)?;
            let moments: Vec<Vec<String>> = (0..n)
                .map(|i| {
                    vec![
                        job.law.label(),
                        job.replicate.to_string(),
                        (i + 1).to_string(),
                        mean[i].to_string(),
                        cov.get(i, i).sqrt().to_string(),
                    ]
                })
                .collect();
            let done = summarize(
                cfg,
                trace,
                job.law,
                n,
                "posterior".into(),
                seed,
                cfg.traces && job.replicate == 0,
            )?;
            Ok((done, moments))
        })
        .collect::<Vec<Result<_, CliError>>>();
    let mut finished = Vec::with_capacity(results.len());
    let mut moments = Vec::new();
    for r in results {
        match r {
            Ok((done, m)) => {
                finished.push(Ok(done));
                moments.extend(m);
            }
            Err(e) => finished.push(Err(e)),
        }
    }
    let moments_path = cfg.out.join("inverse_moments.csv");
    let report = finish(cfg, finished, vec![moments_path.clone()])?;
    write_table(
        &moments_path,
        &["sampler", "replicate", "coord", "mean", "sd"],
        &moments,
    )?;
    Ok(report)
}
