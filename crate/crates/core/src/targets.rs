//! Target distributions.
//!
//! All log-densities are unnormalized. Points outside a truncated support
//! produce [`Error::OutOfSupport`] instead of `-inf`, so callers can tell a
//! support violation apart from a numerical failure.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, quadratic_form, Matrix, SymMatrix};

/// Scale of the logistic perturbation, `√3/π` (unit variance).
pub const LOGISTIC_SCALE: f64 = 0.551_328_895_421_792_1;

/// A density known up to a constant, optionally with derivatives of its
/// negative log and lower bounds on each coordinate.
pub trait TargetDensity: Sync {
    fn dim(&self) -> usize;

    /// `log π(x)` up to an additive constant.
    fn log_density(&self, x: &[f64]) -> Result<f64>;

    /// Gradient of `−log π` at `x`.
    fn grad_neg_log(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::MissingDerivative("a gradient"))
    }

    /// Hessian of `−log π` at `x`.
    fn hess_neg_log(&self, _x: &[f64]) -> Result<SymMatrix> {
        Err(Error::MissingDerivative("a Hessian"))
    }

    /// Per-coordinate lower bounds of the support, if truncated.
    fn lower_bounds(&self) -> Option<&[f64]> {
        None
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

fn centered(x: &[f64], mu: &[f64]) -> Vec<f64> {
    x.iter().zip(mu).map(|(a, b)| a - b).collect()
}

/// Multivariate normal given by its precision matrix and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTarget {
    precision: SymMatrix,
    mean: Vec<f64>,
}

impl GaussianTarget {
    pub fn new(precision: SymMatrix, mean: Vec<f64>) -> Result<Self> {
        check_dim(precision.dim(), &mean)?;
        cholesky(&precision)?;
        Ok(Self { precision, mean })
    }

    pub fn precision(&self) -> &SymMatrix {
        &self.precision
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

/// `−½ (x−μ)ᵀ A (x−μ)`.
pub fn gaussian_log_density(t: &GaussianTarget, x: &[f64]) -> Result<f64> {
    check_dim(t.mean.len(), x)?;
    Ok(-0.5 * quadratic_form(&centered(x, &t.mean), &t.precision)?)
}

impl TargetDensity for GaussianTarget {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        gaussian_log_density(self, x)
    }

    fn grad_neg_log(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x)?;
        self.precision.mul_vec(&centered(x, &self.mean))
    }

    fn hess_neg_log(&self, x: &[f64]) -> Result<SymMatrix> {
        check_dim(self.dim(), x)?;
        Ok(self.precision.clone())
    }
}

/// Normal distribution restricted to `{x : x_i ≥ b_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGaussianTarget {
    base: GaussianTarget,
    lower_bounds: Vec<f64>,
}

impl TruncatedGaussianTarget {
    /// Bounds may be `-inf` for unconstrained coordinates.
    pub fn new(precision: SymMatrix, mean: Vec<f64>, lower_bounds: Vec<f64>) -> Result<Self> {
        let base = GaussianTarget::new(precision, mean)?;
        check_dim(base.mean.len(), &lower_bounds)?;
        if lower_bounds.iter().any(|b| b.is_nan() || *b == f64::INFINITY) {
            return Err(Error::InvalidParameter(
                "lower bounds must be finite or -inf".to_string(),
            ));
        }
        Ok(Self { base, lower_bounds })
    }

    /// Truncation to the positive orthant.
    pub fn positive(precision: SymMatrix, mean: Vec<f64>) -> Result<Self> {
        let n = mean.len();
        Self::new(precision, mean, vec![0.0; n])
    }

    pub fn precision(&self) -> &SymMatrix {
        &self.base.precision
    }

    pub fn mean(&self) -> &[f64] {
        &self.base.mean
    }

    pub fn gaussian(&self) -> &GaussianTarget {
        &self.base
    }

    pub fn in_support(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower_bounds).all(|(xi, b)| xi >= b)
    }
}

impl TargetDensity for TruncatedGaussianTarget {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x)?;
        if !self.in_support(x) {
            return Err(Error::OutOfSupport);
        }
        gaussian_log_density(&self.base, x)
    }

    fn grad_neg_log(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.base.grad_neg_log(x)
    }

    fn hess_neg_log(&self, x: &[f64]) -> Result<SymMatrix> {
        self.base.hess_neg_log(x)
    }

    fn lower_bounds(&self) -> Option<&[f64]> {
        Some(&self.lower_bounds)
    }
}

/// Posterior of a positivity-constrained linear inverse problem.
///
/// With `m_count` replicated observations of `y | x ~ N(Bx, T⁻¹)`, sample mean
/// `ybar`, and a normal prior `(prior_precision, prior_mean)` truncated to
/// `x ≥ 0`, the posterior is a truncated normal with precision
/// `A* = A + Bᵀ(mT)B` and mean `μ* = (A*)⁻¹ (Aμ + Bᵀ(mT) ybar)`.
///
/// `noise_precisions` holds the diagonal of `T`.
pub fn make_inverse_problem_posterior(
    forward: &Matrix,
    noise_precisions: &[f64],
    m_count: usize,
    ybar: &[f64],
    prior_precision: &SymMatrix,
    prior_mean: &[f64],
) -> Result<TruncatedGaussianTarget> {
    let n = prior_precision.dim();
    let m = forward.rows();
    check_dim(n, prior_mean)?;
    if forward.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: forward.cols(),
        });
    }
    check_dim(m, noise_precisions)?;
    check_dim(m, ybar)?;
    if m_count == 0 {
        return Err(Error::InvalidParameter("m_count must be positive".to_string()));
    }
    if noise_precisions.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "noise precisions must be positive".to_string(),
        ));
    }
    let weights: Vec<f64> = noise_precisions.iter().map(|t| t * m_count as f64).collect();

    // Bᵀ (mT) B
    let mut data = prior_precision.as_slice().to_vec();
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] += (0..m)
                .map(|k| forward.get(k, i) * weights[k] * forward.get(k, j))
                .sum::<f64>();
        }
    }
    let post_precision = SymMatrix::symmetrized(&Matrix::new(n, n, data)?)?;

    let weighted_y: Vec<f64> = ybar.iter().zip(&weights).map(|(y, w)| y * w).collect();
    let mut rhs = prior_precision.mul_vec(prior_mean)?;
    for (r, v) in rhs.iter_mut().zip(forward.transpose_mul_vec(&weighted_y)?) {
        *r += v;
    }
    let factor = cholesky(&post_precision)?;
    let post_mean = factor.solve(&rhs)?;
    TruncatedGaussianTarget::positive(post_precision, post_mean)
}

/// Logistic CDF with mean 0 and scale `√3/π`.
pub fn logistic_cdf(u: f64) -> f64 {
    let z = u / LOGISTIC_SCALE;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Density of [`logistic_cdf`].
pub fn logistic_pdf(u: f64) -> f64 {
    let e = (-(u / LOGISTIC_SCALE).abs()).exp();
    e / (LOGISTIC_SCALE * (1.0 + e) * (1.0 + e))
}

/// `log G(u)` without overflow for large `|u|`.
pub fn log_logistic_cdf(u: f64) -> f64 {
    let z = u / LOGISTIC_SCALE;
    // log G = -softplus(-z)
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Skew-normal density with a logistic perturbation:
/// `π(x) ∝ exp{−½ (x−ξ)ᵀA(x−ξ)} · G(αᵀ(x−ξ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewNormalLogisticTarget {
    precision: SymMatrix,
    shape: Vec<f64>,
    location: Vec<f64>,
}

impl SkewNormalLogisticTarget {
    pub fn new(precision: SymMatrix, shape: Vec<f64>, location: Vec<f64>) -> Result<Self> {
        let n = precision.dim();
        check_dim(n, &shape)?;
        check_dim(n, &location)?;
        cholesky(&precision)?;
        Ok(Self {
            precision,
            shape,
            location,
        })
    }

    /// Location fixed at the origin.
    pub fn centered(precision: SymMatrix, shape: Vec<f64>) -> Result<Self> {
        let n = shape.len();
        Self::new(precision, shape, vec![0.0; n])
    }

    /// Builds the target from a covariance matrix `Σ` (precision `Σ⁻¹`).
    pub fn from_covariance(covariance: &SymMatrix, shape: Vec<f64>) -> Result<Self> {
        let n = covariance.dim();
        let factor = cholesky(covariance)?;
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            for (i, v) in factor.solve(&unit)?.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        Self::centered(SymMatrix::symmetrized(&inv)?, shape)
    }

    pub fn precision(&self) -> &SymMatrix {
        &self.precision
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    fn parts(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        check_dim(self.shape.len(), x)?;
        let v = centered(x, &self.location);
        let s = dot(&self.shape, &v);
        Ok((v, s))
    }
}

pub fn skew_log_density(t: &SkewNormalLogisticTarget, x: &[f64]) -> Result<f64> {
    let (v, s) = t.parts(x)?;
    Ok(-0.5 * quadratic_form(&v, &t.precision)? + log_logistic_cdf(s))
}

/// `∇(x) = A(x−ξ) − (1 − G(αᵀ(x−ξ))) α / s`, `s` the logistic scale.
pub fn skew_gradient(t: &SkewNormalLogisticTarget, x: &[f64]) -> Result<Vec<f64>> {
    let (v, s) = t.parts(x)?;
    let tail = logistic_cdf(-s) / LOGISTIC_SCALE;
    let mut g = t.precision.mul_vec(&v)?;
    for (gi, ai) in g.iter_mut().zip(&t.shape) {
        *gi -= tail * ai;
    }
    Ok(g)
}

/// `H(x) = A + (g(αᵀ(x−ξ)) / s) ααᵀ` with `g = G'`.
pub fn skew_hessian(t: &SkewNormalLogisticTarget, x: &[f64]) -> Result<SymMatrix> {
    let (_, s) = t.parts(x)?;
    t.precision
        .rank_one_update(logistic_pdf(s) / LOGISTIC_SCALE, &t.shape)
}

impl TargetDensity for SkewNormalLogisticTarget {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        skew_log_density(self, x)
    }

    fn grad_neg_log(&self, x: &[f64]) -> Result<Vec<f64>> {
        skew_gradient(self, x)
    }

    fn hess_neg_log(&self, x: &[f64]) -> Result<SymMatrix> {
        skew_hessian(self, x)
    }
}
