//! Transition kernels.
//!
//! Every move has the form `x ↦ x + r·e` for a unit direction `e`. For
//! (truncated) normal targets `r` is drawn from the exact conditional along
//! the line, so the move is always accepted. For general smooth targets `r`
//! is drawn from the line conditional of the local normal approximation
//! (gradient and Hessian of `−log π` at `x`) and corrected by a
//! Metropolis–Hastings step.
//!
//! One-dimensional normals are parameterized by (mean, precision); standard
//! deviations appear only where a variate is actually drawn.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use statrs::function::erf::{erfc, erfc_inv};

use crate::diagnostics::{ChainTrace, RunMeta};
use crate::directions::{
    k_h_numeric_2d, DirectionLaw, PreparedLaw, UnitDirection, K_H_DEFAULT_GRID,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, quadratic_form, SymMatrix};
use crate::targets::{GaussianTarget, TargetDensity, TruncatedGaussianTarget};

/// Settings of the Metropolis–Hastings direction kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOptions {
    /// For `h1`/`h2`: the reverse direction `−e` is identified with the
    /// eigenvector of `H(y)` of largest `|dot|`; below this overlap the move
    /// is rejected. Zero never rejects;
    /// [`crate::directions::STRICT_EIGEN_MATCH`] only accepts
    /// near-exact matches.
    pub min_eigen_overlap: f64,
}

impl Default for MhOptions {
    fn default() -> Self {
        Self {
            min_eigen_overlap: 0.0,
        }
    }
}

/// Standardized distance beyond which both truncation bounds count as far
/// tail and the exponential rejection sampler is used.
pub const TAIL_SWITCH: f64 = 6.0;

/// Mean and precision of a normal law for the step length `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    pub mean: f64,
    pub precision: f64,
}

impl LineParams {
    pub fn sd(&self) -> f64 {
        self.precision.powf(-0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    pub iteration: u64,
}

impl ChainState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, iteration: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: ChainState,
    pub accepted: bool,
    pub direction: UnitDirection,
    pub r: f64,
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn moved(x: &[f64], e: &UnitDirection, r: f64) -> Vec<f64> {
    x.iter().zip(e.as_slice()).map(|(xi, ei)| xi + r * ei).collect()
}

/// Conditional law of `r` for a normal target restricted to `x + r·e`:
/// mean `−eᵀAv / eᵀAe`, precision `eᵀAe`, with `v = x − μ`.
pub fn line_params_gaussian(
    a: &SymMatrix,
    mu: &[f64],
    x: &[f64],
    e: &UnitDirection,
) -> Result<LineParams> {
    check_dim(a.dim(), mu.len())?;
    check_dim(a.dim(), x.len())?;
    check_dim(a.dim(), e.dim())?;
    let v: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
    let ae = a.mul_vec(e.as_slice())?;
    let precision = dot(&ae, e.as_slice());
    Ok(LineParams {
        mean: -dot(&ae, &v) / precision,
        precision,
    })
}

pub fn step_gibbs_gaussian<R: Rng + ?Sized>(
    t: &GaussianTarget,
    state: &ChainState,
    e: &UnitDirection,
    rng: &mut R,
) -> Result<StepOutcome> {
    let lp = line_params_gaussian(t.precision(), t.mean(), &state.x, e)?;
    let z: f64 = rng.sample(StandardNormal);
    let r = lp.mean + lp.sd() * z;
    Ok(StepOutcome {
        next: ChainState {
            x: moved(&state.x, e, r),
            iteration: state.iteration + 1,
        },
        accepted: true,
        direction: e.clone(),
        r,
    })
}

/// Largest interval `(r_lo, r_hi)` with `x + r·e ≥ lower_bounds`.
pub fn feasible_interval(x: &[f64], e: &UnitDirection, lower_bounds: &[f64]) -> Result<(f64, f64)> {
    check_dim(x.len(), e.dim())?;
    check_dim(x.len(), lower_bounds.len())?;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((xi, ei), bi) in x.iter().zip(e.as_slice()).zip(lower_bounds) {
        if bi.is_infinite() {
            continue;
        }
        if xi < bi || xi.is_nan() {
            return Err(Error::EmptyInterval);
        }
        let limit = (bi - xi) / ei;
        if *ei > 0.0 {
            lo = lo.max(limit);
        } else if *ei < 0.0 {
            hi = hi.min(limit);
        }
    }
    Ok((lo, hi))
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal restricted to `[a, b]` with `a` far in the upper tail:
/// exponential proposals with rate `(a + √(a² + 4))/2`, accepted with
/// probability `exp{−(z − rate)²/2}`.
fn upper_tail_standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    let width = b - a;
    loop {
        let step = if width.is_finite() {
            // inverse CDF of Exp(rate) truncated to [0, width]
            let mass = -(-rate * width).exp_m1();
            let u: f64 = rng.random();
            -(-u * mass).ln_1p() / rate
        } else {
            let e: f64 = Exp1.sample(rng);
            e / rate
        };
        let z = a + step;
        let accept = (-0.5 * (z - rate) * (z - rate)).exp();
        if rng.random::<f64>() < accept {
            return z.min(b);
        }
    }
}

fn truncated_standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a >= TAIL_SWITCH {
        return upper_tail_standard(a, b, rng);
    }
    if b <= -TAIL_SWITCH {
        return -upper_tail_standard(-b, -a, rng);
    }
    let u: f64 = rng.random();
    if a >= 0.0 {
        let (qa, qb) = (std_normal_sf(a), std_normal_sf(b));
        let q = qb + u * (qa - qb);
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * q)
    } else {
        let (pa, pb) = (std_normal_cdf(a), std_normal_cdf(b));
        let p = pa + u * (pb - pa);
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
    }
}

/// Draws from `N(mean, sd²)` conditioned on `(lo, hi)`.
///
/// Inverse-CDF sampling on the standardized scale, using the survival
/// function for upper-tail intervals so that no precision is lost to
/// `1 − Φ`; intervals entirely beyond `TAIL_SWITCH` standard deviations use
/// an exponential rejection sampler instead.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(lo < hi) || !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    if !(a < b) || a == f64::INFINITY || b == f64::NEG_INFINITY {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    let mut x = mean;
    for _ in 0..16 {
        let z = truncated_standard(a, b, rng);
        x = (mean + sd * z).clamp(lo, hi);
        if x > lo && x < hi {
            return Ok(x);
        }
    }
    if !x.is_finite() {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    // interval narrower than the spacing of representable numbers near it
    Ok(x)
}

/// Exact direction-Gibbs move for a normal target with lower bounds.
pub fn step_gibbs_truncated<R: Rng + ?Sized>(
    t: &TruncatedGaussianTarget,
    state: &ChainState,
    e: &UnitDirection,
    rng: &mut R,
) -> Result<StepOutcome> {
    let bounds = t.lower_bounds().expect("truncated target has bounds");
    let lp = line_params_gaussian(t.precision(), t.mean(), &state.x, e)?;
    let (lo, hi) = feasible_interval(&state.x, e, bounds)?;
    let r = sample_truncated_normal(lp.mean, lp.sd(), lo, hi, rng)?;
    let mut x = moved(&state.x, e, r);
    for (xi, bi) in x.iter_mut().zip(bounds) {
        if *xi < *bi {
            *xi = *bi;
        }
    }
    Ok(StepOutcome {
        next: ChainState {
            x,
            iteration: state.iteration + 1,
        },
        accepted: true,
        direction: e.clone(),
        r,
    })
}

/// Line law of the local normal approximation at `x`:
/// mean `−eᵀ∇(x) / eᵀH(x)e`, precision `eᵀH(x)e`.
fn local_line_params(grad: &[f64], hess: &SymMatrix, e: &UnitDirection) -> Result<LineParams> {
    let precision = quadratic_form(e.as_slice(), hess)?;
    if !(precision > 0.0) {
        return Err(Error::NonPositiveCurvature(precision));
    }
    Ok(LineParams {
        mean: -dot(e.as_slice(), grad) / precision,
        precision,
    })
}

/// Draws `r ~ N(−eᵀ∇(x)/eᵀH(x)e, precision eᵀH(x)e)` and returns
/// `(x + r·e, r)`.
pub fn propose_mh<T, R>(t: &T, x: &[f64], e: &UnitDirection, rng: &mut R) -> Result<(Vec<f64>, f64)>
where
    T: TargetDensity + ?Sized,
    R: Rng + ?Sized,
{
    let lp = local_line_params(&t.grad_neg_log(x)?, &t.hess_neg_log(x)?, e)?;
    let z: f64 = rng.sample(StandardNormal);
    let r = lp.mean + lp.sd() * z;
    Ok((moved(x, e, r), r))
}

/// Log of the joint weight of being at `x` and proposing the move `r·e`:
/// `g(x) + log_norm − (eᵀHe/2)(r + eᵀ∇/eᵀHe)²`.
///
/// For `h*`, `log_norm = log K_{H(x)}`; see [`direction_log_norm`] for the
/// other laws.
pub fn psi<T: TargetDensity + ?Sized>(
    t: &T,
    x: &[f64],
    e: &UnitDirection,
    r: f64,
    log_norm: f64,
) -> Result<f64> {
    let g = t.log_density(x)?;
    psi_parts(g, &t.grad_neg_log(x)?, &t.hess_neg_log(x)?, e, r, log_norm)
}

fn psi_parts(
    g: f64,
    grad: &[f64],
    hess: &SymMatrix,
    e: &UnitDirection,
    r: f64,
    log_norm: f64,
) -> Result<f64> {
    let lp = local_line_params(grad, hess, e)?;
    let d = r - lp.mean;
    Ok(g + log_norm - 0.5 * lp.precision * d * d)
}

/// Direction-dependent part of the log proposal density at one endpoint.
///
/// The proposal density of `x + r·e` is `h(e)·√(eᵀHe/2π)·exp{…}`. For `h*`
/// the factor `(eᵀHe)^(−1/2)` of the direction density cancels the line
/// normalizer and only `log K_H` remains. For the other laws the line
/// normalizer does not cancel, so this returns
/// `log h(e) + ½ log eᵀHe`. `None` means the reverse direction cannot be
/// produced by the law at this point.
pub fn direction_log_norm(
    law: &DirectionLaw,
    hess: &SymMatrix,
    e: &UnitDirection,
    tempering: Option<f64>,
    opts: MhOptions,
) -> Result<Option<f64>> {
    match law {
        DirectionLaw::HStar => {
            if hess.dim() != 2 {
                return Err(Error::UnsupportedDimension(hess.dim()));
            }
            Ok(Some(k_h_numeric_2d(hess, K_H_DEFAULT_GRID)?.ln()))
        }
        _ => {
            let q = quadratic_form(e.as_slice(), hess)?;
            Ok(law
                .line_log_weight(hess, e, tempering, opts.min_eigen_overlap)?
                .map(|w| w + 0.5 * q.ln()))
        }
    }
}

/// `log R(x, e, r) = ψ_{x+re}(−e, r) − ψ_x(e, r)`; `−inf` when the proposal
/// leaves the support or its reverse direction is not available.
pub fn mh_log_ratio<T: TargetDensity + ?Sized>(
    t: &T,
    x: &[f64],
    e: &UnitDirection,
    r: f64,
    law: &DirectionLaw,
    tempering: Option<f64>,
    opts: MhOptions,
) -> Result<f64> {
    let y = moved(x, e, r);
    let gy = match t.log_density(&y) {
        Ok(g) => g,
        Err(Error::OutOfSupport) => return Ok(f64::NEG_INFINITY),
        Err(err) => return Err(err),
    };
    let hx = t.hess_neg_log(x)?;
    let Some(norm_x) = direction_log_norm(law, &hx, e, tempering, MhOptions::default())? else {
        return Err(Error::InvalidParameter(
            "forward direction is not producible by the law".to_string(),
        ));
    };
    let back = e.negated();
    let hy = t.hess_neg_log(&y)?;
    let Some(norm_y) = direction_log_norm(law, &hy, &back, tempering, opts)? else {
        return Ok(f64::NEG_INFINITY);
    };
    let psi_x = psi_parts(t.log_density(x)?, &t.grad_neg_log(x)?, &hx, e, r, norm_x)?;
    let psi_y = psi_parts(gy, &t.grad_neg_log(&y)?, &hy, &back, r, norm_y)?;
    Ok(psi_y - psi_x)
}

/// Metropolis–Hastings ratio `R(x, e, r)`.
pub fn mh_ratio<T: TargetDensity + ?Sized>(
    t: &T,
    x: &[f64],
    e: &UnitDirection,
    r: f64,
    law: &DirectionLaw,
    tempering: Option<f64>,
    opts: MhOptions,
) -> Result<f64> {
    Ok(mh_log_ratio(t, x, e, r, law, tempering, opts)?.exp())
}

/// One Metropolis–Hastings direction move: draw `e` from `law` at the local
/// Hessian, propose along the local normal line conditional, accept with
/// probability `min{1, R}`.
pub fn step_mh<T, R>(
    t: &T,
    state: &ChainState,
    law: &DirectionLaw,
    opts: MhOptions,
    rng: &mut R,
) -> Result<StepOutcome>
where
    T: TargetDensity + ?Sized,
    R: Rng + ?Sized,
{
    let x = &state.x;
    let n = t.dim();
    check_dim(n, x.len())?;
    if matches!(law, DirectionLaw::HStar) && n != 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let gx = t.log_density(x)?;
    let grad_x = t.grad_neg_log(x)?;
    let hx = t.hess_neg_log(x)?;

    let draw = PreparedLaw::new(law, &hx)?.sample(rng)?;
    let e = draw.direction;
    let lp = local_line_params(&grad_x, &hx, &e)?;
    let z: f64 = rng.sample(StandardNormal);
    let r = lp.mean + lp.sd() * z;
    let y = moved(x, &e, r);

    let log_r = match t.log_density(&y) {
        Ok(gy) => {
            let norm_x = draw.log_weight + 0.5 * lp.precision.ln();
            let back = e.negated();
            let hy = t.hess_neg_log(&y)?;
            match direction_log_norm(law, &hy, &back, draw.tempering, opts)? {
                Some(norm_y) => {
                    let psi_x = psi_parts(gx, &grad_x, &hx, &e, r, norm_x)?;
                    let psi_y = psi_parts(gy, &t.grad_neg_log(&y)?, &hy, &back, r, norm_y)?;
                    psi_y - psi_x
                }
                None => f64::NEG_INFINITY,
            }
        }
        Err(Error::OutOfSupport) => f64::NEG_INFINITY,
        Err(err) => return Err(err),
    };

    let accepted = log_r >= 0.0 || rng.random::<f64>().ln() < log_r;
    Ok(StepOutcome {
        next: ChainState {
            x: if accepted { y } else { x.clone() },
            iteration: state.iteration + 1,
        },
        accepted,
        direction: e,
        r,
    })
}

fn check_start(t: &dyn TargetDensity, x0: &[f64]) -> Result<()> {
    check_dim(t.dim(), x0.len())?;
    t.log_density(x0).map(|_| ())
}

/// Runs `iterations` exact Gibbs moves on a truncated normal target with
/// directions from `law` (prepared once against the target precision).
pub fn run_gibbs_truncated<R: Rng + ?Sized>(
    t: &TruncatedGaussianTarget,
    law: &DirectionLaw,
    x0: Vec<f64>,
    iterations: usize,
    rng: &mut R,
) -> Result<ChainTrace> {
    check_start(t, &x0)?;
    let prepared = PreparedLaw::new(law, t.precision())?;
    let mut trace = ChainTrace::new(t.dim(), RunMeta::new("truncated", law, iterations));
    let mut state = ChainState::new(x0);
    for _ in 0..iterations {
        let draw = prepared.sample(rng)?;
        let out = step_gibbs_truncated(t, &state, &draw.direction, rng)?;
        trace.push(&out.next.x, true);
        state = out.next;
    }
    Ok(trace)
}

/// Runs `iterations` exact Gibbs moves on an unconstrained normal target.
pub fn run_gibbs_gaussian<R: Rng + ?Sized>(
    t: &GaussianTarget,
    law: &DirectionLaw,
    x0: Vec<f64>,
    iterations: usize,
    rng: &mut R,
) -> Result<ChainTrace> {
    check_start(t, &x0)?;
    let prepared = PreparedLaw::new(law, t.precision())?;
    let mut trace = ChainTrace::new(t.dim(), RunMeta::new("gaussian", law, iterations));
    let mut state = ChainState::new(x0);
    for _ in 0..iterations {
        let draw = prepared.sample(rng)?;
        let out = step_gibbs_gaussian(t, &state, &draw.direction, rng)?;
        trace.push(&out.next.x, true);
        state = out.next;
    }
    Ok(trace)
}

/// Runs `iterations` Metropolis–Hastings direction moves; rejected steps
/// repeat the current point and are recorded.
pub fn run_mh<T, R>(
    t: &T,
    law: &DirectionLaw,
    opts: MhOptions,
    x0: Vec<f64>,
    iterations: usize,
    rng: &mut R,
) -> Result<ChainTrace>
where
    T: TargetDensity,
    R: Rng + ?Sized,
{
    check_start(t, &x0)?;
    let mut trace = ChainTrace::new(t.dim(), RunMeta::new("mh", law, iterations));
    let mut state = ChainState::new(x0);
    for _ in 0..iterations {
        let out = step_mh(t, &state, law, opts, rng)?;
        trace.push(&out.next.x, out.accepted);
        state = out.next;
    }
    Ok(trace)
}
