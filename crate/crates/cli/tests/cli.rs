use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn dirgibbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirgibbs"))
        .args(args)
        .output()
        .expect("spawn dirgibbs")
}

fn ok(args: &[&str]) -> String {
    let out = dirgibbs(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    for args in [
        vec!["benchmark", "--dims", "1", "--out", out],
        vec!["benchmark", "--dims", "2", "--iters", "500", "--out", out],
        vec!["benchmark", "--laws", "bogus", "--out", out],
        vec!["skew", "--laws", "sphere", "--out", out],
        vec!["skew", "--cases", "e", "--out", out],
        vec!["mi", "--out", out],
        vec!["inverse", "--target", "/nonexistent/target.txt", "--out", out],
        vec!["frobnicate"],
    ] {
        assert_eq!(dirgibbs(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn hstar_mh_outside_two_dimensions_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("A.csv"), "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    fs::write(d.join("t.txt"), "family = skew\nprecision = A.csv\nalpha = 1,1,1\n").unwrap();
    let out = dirgibbs(&["skew", "--target", s(&d.join("t.txt")), "--laws", "hstar", "--out", s(d)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension 2"));
    // angular has a closed-form normalizer and runs in 3-D
    ok(&["skew", "--target", s(&d.join("t.txt")), "--laws", "angular", "--iters", "1000", "--reps", "1", "--out", s(d)]);
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("A.csv"), "1,2\n2,1\n").unwrap();
    let out = dirgibbs(&["mi", "--precision", s(&d.join("A.csv")), "--out", s(d)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mi_table_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("I.csv"), "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    ok(&["mi", "--precision", s(&d.join("I.csv")), "--draws", "5", "--out", s(d)]);
    let rows = read_csv(&d.join("mi_table.csv"));
    assert_eq!(rows.len(), 3 + 3 + 5);
    for r in &rows {
        assert!(r[3].parse::<f64>().unwrap().abs() < 1e-12);
    }

    fs::write(d.join("D.csv"), "1,0\n0,4\n").unwrap();
    let stdout = ok(&["mi", "--precision", s(&d.join("D.csv")), "--draws", "0", "--out", s(d)]);
    assert!(stdout.contains("C1 = "));
    let rows = read_csv(&d.join("mi_table.csv"));
    let val = |i: usize| rows[i][3].parse::<f64>().unwrap();
    assert_eq!((rows[0][0].as_str(), val(0)), ("coord", 0.0));
    assert!((val(1) - 2f64.ln()).abs() < 1e-12);
    let argmin: Vec<_> = rows.iter().filter(|r| r[4] == "1").collect();
    assert_eq!(argmin.len(), 1);
    assert_eq!((argmin[0][0].as_str(), argmin[0][1].as_str()), ("eigen", "1"));
}

#[test]
fn skew_without_shape_accepts_everything() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    ok(&["skew", "--cases", "a", "--shape", "0,0", "--laws", "hstar,angular,h1,h2", "--iters", "2000", "--reps", "2", "--out", d]);
    for r in read_csv(&dir.path().join("skew_summary.csv")) {
        assert_eq!(r[6], "1", "{r:?}");
    }
}

#[test]
fn benchmark_summary_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let stdout = ok(&[
        "benchmark", "--dims", "2,3", "--alphas", "0,10", "--laws", "coord,h2=2,5", "--iters", "2000",
        "--reps", "3", "--burnin", "100", "--out", s(d),
    ]);
    assert!(stdout.contains("iat/n"));
    let header = fs::read_to_string(d.join("benchmark_summary.csv")).unwrap();
    assert!(header.starts_with(
        "run_id,sampler,n,alpha_or_case,seed,iters,accept_rate,iat_max,iat_per_dim\n"
    ));
    let rows = read_csv(&d.join("benchmark_summary.csv"));
    assert_eq!(rows.len(), 2 * 2 * 2 * 3);
    assert_eq!(rows[0][1], "coord");
    assert!(rows.iter().any(|r| r[1] == "h2=2,5"));
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        let iat: f64 = r[7].parse().unwrap();
        let n: f64 = r[2].parse().unwrap();
        assert!(iat >= 1.0);
        assert!((r[8].parse::<f64>().unwrap() - iat / n).abs() < 1e-12);
    }
    let medians = read_csv(&d.join("benchmark_medians.csv"));
    assert_eq!(medians.len(), 8);
    assert!(medians.iter().all(|m| m[3] == "3"));
}

#[test]
fn benchmark_cells_do_not_depend_on_the_grid() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["benchmark", "--dims", "3", "--alphas", "5", "--laws", "sphere", "--iters", "1500", "--reps", "2", "--out", s(a.path())]);
    ok(&["benchmark", "--dims", "2,3", "--alphas", "0,5", "--laws", "coord,sphere", "--iters", "1500", "--reps", "2", "--out", s(b.path())]);
    let small = read_csv(&a.path().join("benchmark_summary.csv"));
    let big = read_csv(&b.path().join("benchmark_summary.csv"));
    for r in &small {
        let m = big
            .iter()
            .find(|q| q[1] == r[1] && q[2] == r[2] && q[3] == r[3] && q[4] == r[4])
            .unwrap();
        assert_eq!(&m[5..], &r[5..]);
    }
}

fn write_inverse(d: &Path, forward: &str, bounds: &str) {
    fs::write(d.join("B.csv"), forward).unwrap();
    fs::write(d.join("T.csv"), "1,1\n").unwrap();
    fs::write(d.join("ybar.csv"), "1.0,-0.4\n").unwrap();
    fs::write(d.join("A0.csv"), "1,0.6\n0.6,2\n").unwrap();
    fs::write(d.join("mu0.csv"), "0.2,0.3\n").unwrap();
    fs::write(
        d.join("post.txt"),
        format!(
            "# two-parameter problem\nfamily = inverse-posterior\nforward = B.csv\nnoise = T.csv\n\
             m = 1\nybar = ybar.csv\nprior_precision = A0.csv\nprior_mean = mu0.csv\nbounds = {bounds}\n"
        ),
    )
    .unwrap();
}

fn mean_by_coord(path: &Path, law: &str) -> Vec<f64> {
    let rows = read_csv(path);
    let mut sums = [0.0; 2];
    let mut counts = [0.0; 2];
    for r in rows.iter().filter(|r| r[0] == law) {
        let c: usize = r[2].parse().unwrap();
        sums[c - 1] += r[3].parse::<f64>().unwrap();
        counts[c - 1] += 1.0;
    }
    vec![sums[0] / counts[0], sums[1] / counts[1]]
}

#[test]
fn inverse_identity_problem_averages_prior_and_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_inverse(d, "1,0\n0,1\n", "none");
    // identity prior precision, so the posterior mean is (μ + ȳ)/2
    fs::write(d.join("A0.csv"), "1,0\n0,1\n").unwrap();
    ok(&["inverse", "--target", s(&d.join("post.txt")), "--laws", "coord,angular", "--iters", "40000", "--reps", "2", "--out", s(d)]);
    for law in ["coord", "angular"] {
        let m = mean_by_coord(&d.join("inverse_moments.csv"), law);
        assert!((m[0] - 0.6).abs() < 0.02, "{law} {m:?}");
        assert!((m[1] - -0.05).abs() < 0.02, "{law} {m:?}");
    }
}

#[test]
fn inverse_without_data_recovers_truncated_prior() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_inverse(d, "0,0\n0,0\n", "positive");
    ok(&["inverse", "--target", s(&d.join("post.txt")), "--laws", "sphere,hstar", "--iters", "40000", "--reps", "2", "--out", s(d)]);

    // rejection oracle: N(μ0, A0⁻¹) kept when both coordinates are positive
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cov: [[f64; 2]; 2] = [[2.0 / 1.64, -0.6 / 1.64], [-0.6 / 1.64, 1.0 / 1.64]];
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let l11 = (cov[1][1] - l10 * l10).sqrt();
    let (mut sum, mut kept) = ([0.0; 2], 0.0);
    while kept < 200_000.0 {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let x = [0.2 + l00 * z0, 0.3 + l10 * z0 + l11 * z1];
        if x[0] > 0.0 && x[1] > 0.0 {
            sum[0] += x[0];
            sum[1] += x[1];
            kept += 1.0;
        }
    }
    for law in ["sphere", "hstar"] {
        let m = mean_by_coord(&d.join("inverse_moments.csv"), law);
        for k in 0..2 {
            assert!((m[k] - sum[k] / kept).abs() < 0.02, "{law} {m:?}");
        }
    }
}
