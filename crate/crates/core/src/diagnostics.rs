//! Chain traces, autocorrelation and integrated autocorrelation time.

use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::directions::DirectionLaw;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Shortest series accepted by the IAT estimator.
pub const MIN_IAT_LEN: usize = 100;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMeta {
    pub target: String,
    pub law: String,
    pub seed: Option<u64>,
    pub iterations: usize,
}

impl RunMeta {
    pub fn new(target: &str, law: &DirectionLaw, iterations: usize) -> Self {
        Self {
            target: target.to_string(),
            law: law.label(),
            seed: None,
            iterations,
        }
    }
}

/// States visited by a chain, row-major, plus per-step acceptance flags.
/// The starting point is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    dim: usize,
    samples: Vec<f64>,
    accepted: Vec<bool>,
    meta: RunMeta,
}

impl ChainTrace {
    pub fn new(dim: usize, meta: RunMeta) -> Self {
        let cap = meta.iterations;
        Self {
            dim,
            samples: Vec::with_capacity(cap * dim),
            accepted: Vec::with_capacity(cap),
            meta,
        }
    }

    pub fn push(&mut self, x: &[f64], accepted: bool) {
        assert_eq!(x.len(), self.dim, "state dimension");
        self.samples.extend_from_slice(x);
        self.accepted.push(accepted);
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().skip(j).step_by(self.dim).copied().collect()
    }

    pub fn accepted(&self) -> &[bool] {
        &self.accepted
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut RunMeta {
        &mut self.meta
    }

    /// Drops the first `k` states.
    pub fn discard_burnin(&mut self, k: usize) {
        let k = k.min(self.len());
        self.samples.drain(..k * self.dim);
        self.accepted.drain(..k);
    }
}

/// Writes `iter,accepted,x1..xn`, one line per stored state.
pub fn write_trace_csv<W: Write>(trace: &ChainTrace, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iter".to_string(), "accepted".to_string()];
    header.extend((1..=trace.dim()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for i in 0..trace.len() {
        let mut rec = vec![(i + 1).to_string(), u8::from(trace.accepted[i]).to_string()];
        rec.extend(trace.row(i).iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn acceptance_rate(trace: &ChainTrace) -> f64 {
    if trace.is_empty() {
        return 0.0;
    }
    trace.accepted.iter().filter(|a| **a).count() as f64 / trace.len() as f64
}

/// Sample mean and (1/T-normalized) covariance of the stored states.
pub fn empirical_moments(trace: &ChainTrace) -> Result<(Vec<f64>, SymMatrix)> {
    let n = trace.dim();
    let t = trace.len();
    if t == 0 {
        return Err(Error::TooShort { len: 0, min: 1 });
    }
    let mut mean = vec![0.0; n];
    for i in 0..t {
        for (m, x) in mean.iter_mut().zip(trace.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t as f64);
    let mut cov = vec![0.0; n * n];
    for i in 0..t {
        let row = trace.row(i);
        for a in 0..n {
            let da = row[a] - mean[a];
            for b in a..n {
                cov[a * n + b] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..n {
        for b in a..n {
            let v = cov[a * n + b] / t as f64;
            cov[a * n + b] = v;
            cov[b * n + a] = v;
        }
    }
    Ok((mean, SymMatrix::new(n, cov)?))
}

fn centered(series: &[f64]) -> Vec<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    series.iter().map(|x| x - mean).collect()
}

/// Sample autocorrelation at `lag`: `ĉ(k)/ĉ(0)` with
/// `ĉ(k) = (1/T) Σ_{t<T−k} (x_t − x̄)(x_{t+k} − x̄)`.
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<f64> {
    if series.len() < 2 || lag >= series.len() {
        return Err(Error::TooShort {
            len: series.len(),
            min: lag.max(1) + 1,
        });
    }
    let d = centered(series);
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let ck: f64 = d.iter().zip(&d[lag..]).map(|(a, b)| a * b).sum();
    Ok(ck / c0)
}

/// All autocovariances `ĉ(0..T)` (1/T-normalized) via zero-padded FFT.
pub fn autocovariances(series: &[f64]) -> Vec<f64> {
    let t = series.len();
    if t == 0 {
        return Vec::new();
    }
    let size = (2 * t).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = centered(series)
        .into_iter()
        .map(|v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    buf.iter_mut().for_each(|z| *z = Complex::new(z.norm_sqr(), 0.0));
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / (size as f64 * t as f64);
    buf[..t].iter().map(|z| z.re * scale).collect()
}

/// Geyer's initial positive sequence sum before clamping:
/// `(−1 + 2 Σ_{m<M} Γ_m, last lag used)`, `Γ_m = ρ(2m) + ρ(2m+1)`,
/// truncated at the first non-positive `Γ_m`.
fn geyer(series: &[f64]) -> Result<(f64, usize)> {
    if series.len() < MIN_IAT_LEN {
        return Err(Error::TooShort {
            len: series.len(),
            min: MIN_IAT_LEN,
        });
    }
    let acov = autocovariances(series);
    let c0 = acov[0];
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::ZeroVariance);
    }
    let mut sum = 0.0;
    let mut window = 0;
    let mut m = 0;
    while 2 * m + 1 < acov.len() {
        let gamma = (acov[2 * m] + acov[2 * m + 1]) / c0;
        if gamma <= 0.0 {
            break;
        }
        sum += gamma;
        window = 2 * m + 1;
        m += 1;
    }
    Ok((-1.0 + 2.0 * sum, window))
}

/// Integrated autocorrelation time `τ = 1 + 2 Σ_{k≥1} ρ(k)`, estimated with
/// Geyer's initial positive sequence and clamped below at 1.
pub fn iat(series: &[f64]) -> Result<f64> {
    Ok(iat_with_window(series)?.0)
}

/// As [`iat`], also returning the last lag included in the sum.
pub fn iat_with_window(series: &[f64]) -> Result<(f64, usize)> {
    let (tau, window) = geyer(series)?;
    Ok((tau.max(1.0), window))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IatReport {
    pub per_coordinate: Vec<f64>,
    /// Maximum over coordinates.
    pub aggregate: f64,
    pub window_used: Vec<usize>,
}

pub fn iat_report(trace: &ChainTrace) -> Result<IatReport> {
    let mut per_coordinate = Vec::with_capacity(trace.dim());
    let mut window_used = Vec::with_capacity(trace.dim());
    for j in 0..trace.dim() {
        let (tau, w) = iat_with_window(&trace.column(j))?;
        per_coordinate.push(tau);
        window_used.push(w);
    }
    let aggregate = per_coordinate.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(IatReport {
        per_coordinate,
        aggregate,
        window_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1(phi: f64, len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = (1.0 - phi * phi).sqrt();
        let mut x: f64 = rng.sample(StandardNormal);
        (0..len)
            .map(|_| {
                x = phi * x + sd * rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect()
    }

    #[test]
    fn ar1_autocorrelation_decays_geometrically() {
        let s = ar1(0.5, 200_000, 1);
        for k in 0..5 {
            let rho = autocorrelation(&s, k).unwrap();
            assert!((rho - 0.5f64.powi(k as i32)).abs() < 0.01, "lag {k}: {rho}");
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let s = ar1(0.7, 1_000, 2);
        let acov = autocovariances(&s);
        for k in [0, 1, 2, 7, 50, 999] {
            let direct = autocorrelation(&s, k).unwrap();
            assert!((acov[k] / acov[0] - direct).abs() < 1e-12, "lag {k}");
        }
    }

    #[test]
    fn ar1_iat() {
        // τ = (1 + φ)/(1 − φ)
        let tau = iat(&ar1(0.5, 200_000, 3)).unwrap();
        assert!((tau - 3.0).abs() / 3.0 < 0.05, "{tau}");
        let tau = iat(&ar1(0.9, 500_000, 4)).unwrap();
        assert!((tau - 19.0).abs() / 19.0 < 0.1, "{tau}");
    }

    #[test]
    fn white_noise_is_near_one() {
        let (tau, window) = iat_with_window(&ar1(0.0, 100_000, 5)).unwrap();
        assert!((tau - 1.0).abs() < 0.05, "{tau}");
        assert!(window < 20);
    }

    #[test]
    fn alternating_series_is_clamped() {
        let s: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(geyer(&s).unwrap().0 < 1.0);
        assert_eq!(iat(&s).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            iat(&[1.0; 50]).unwrap_err(),
            Error::TooShort { len: 50, min: MIN_IAT_LEN }
        );
        assert_eq!(iat(&[2.0; 500]).unwrap_err(), Error::ZeroVariance);
        assert_eq!(autocorrelation(&[1.0; 10], 2).unwrap_err(), Error::ZeroVariance);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn iat_is_affine_invariant(seed in 0u64..1000, a in 0.1f64..50.0, b in -100.0f64..100.0,
                                   phi in -0.5f64..0.95) {
            let s = ar1(phi, 2_000, seed);
            let t: Vec<f64> = s.iter().map(|x| a * x + b).collect();
            let (t1, t2) = (iat(&s).unwrap(), iat(&t).unwrap());
            prop_assert!((t1 - t2).abs() <= 1e-10 * t1.max(1.0));
            let neg: Vec<f64> = s.iter().map(|x| -x).collect();
            prop_assert!((iat(&neg).unwrap() - t1).abs() <= 1e-10 * t1.max(1.0));
        }

        #[test]
        fn iat_is_at_least_one(seed in 0u64..1000, phi in -0.9f64..0.9) {
            prop_assert!(iat(&ar1(phi, 500, seed)).unwrap() >= 1.0);
        }
    }

    #[test]
    fn trace_accessors_and_csv() {
        let mut tr = ChainTrace::new(2, RunMeta::default());
        tr.push(&[1.0, 2.0], true);
        tr.push(&[1.0, 2.0], false);
        tr.push(&[3.0, -1.5], true);
        assert_eq!(tr.column(1), vec![2.0, 2.0, -1.5]);
        assert!((acceptance_rate(&tr) - 2.0 / 3.0).abs() < 1e-15);
        let mut buf = Vec::new();
        write_trace_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "iter,accepted,x1,x2\n1,1,1.0,2.0\n2,0,1.0,2.0\n3,1,3.0,-1.5\n");
        tr.discard_burnin(1);
        assert_eq!(tr.len(), 2);
        assert_eq!(tr.row(0), &[1.0, 2.0]);
        let (mean, cov) = empirical_moments(&tr).unwrap();
        assert_eq!(mean, vec![2.0, 0.25]);
        assert_eq!(cov.get(0, 0), 1.0);
    }
}
