//! Direction laws on the unit sphere.
//!
//! The optimal law `h*(e) ∝ (eᵀAe)^(−1/2)` favours directions of low
//! precision, i.e. directions along which the mutual information between
//! consecutive states, `C₁ + ½ log eᵀAe`, is smallest. It is sampled exactly
//! by normalizing a draw from `N(0, A⁻¹)`.
//!
//! The eigenvector laws `h1` and `h2` restrict directions to the
//! eigenvectors of a local precision, with probabilities proportional to
//! `λ_i^(−1)` and `λ_i^(−b)`, `b ~ Beta(a₀, b₀)`, respectively.
//!
//! Log weights reported by this module are weights of the *line* `±e`: every
//! law here is symmetric under `e ↦ −e`, and the eigenvector laws draw the
//! sign of the returned vector uniformly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, dot, norm, quadratic_form, sym_eigen, CholeskyFactor, EigenDecomposition, Matrix,
    SymMatrix,
};

/// Grid size used for the `n = 2` normalizer of `h*`.
pub const K_H_DEFAULT_GRID: usize = 4096;

/// Strict minimum `|⟨e, q⟩|` for a direction to be identified with
/// eigenvector `q`. The default is 0: any direction is identified with its
/// nearest eigenvector.
pub const STRICT_EIGEN_MATCH: f64 = 0.999;

const UNIT_TOL: f64 = 1e-12;

/// A vector of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDirection(Vec<f64>);

impl UnitDirection {
    /// Normalizes `v`; fails on zero or non-finite input.
    pub fn normalize(mut v: Vec<f64>) -> Result<Self> {
        let len = norm(&v);
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidParameter(
                "cannot normalize a zero or non-finite vector".to_string(),
            ));
        }
        v.iter_mut().for_each(|x| *x /= len);
        Ok(Self(v))
    }

    /// Wraps `v`, checking `|‖v‖ − 1| ≤ 1e−12`.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if (norm(&v) - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "direction has norm {}, expected 1",
                norm(&v)
            )));
        }
        Ok(Self(v))
    }

    /// The `i`-th standard basis vector of `R^n`.
    pub fn axis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }
}

impl AsRef<[f64]> for UnitDirection {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A sampled direction and the log weight of its line under the law that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionDraw {
    pub direction: UnitDirection,
    /// Log probability (discrete laws) or log density (continuous laws).
    pub log_weight: f64,
    /// Exponent `b` used by a tempered eigenvector draw.
    pub tempering: Option<f64>,
}

/// Which direction law to use.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionLaw {
    /// Random-scan coordinate directions with the given weights.
    Coordinate(Vec<f64>),
    UniformSphere,
    HStar,
    /// Direction of a centered normal draw with precision `A`; density
    /// `∝ (eᵀAe)^(−n/2)`.
    Angular,
    H1,
    /// Eigenvectors with probability `∝ λ^(−b)`, `b ~ Beta(a, b)`.
    H2 { beta_a: f64, beta_b: f64 },
}

impl DirectionLaw {
    pub fn coordinate(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(Self::Coordinate(weights))
    }

    pub fn coordinate_uniform(n: usize) -> Self {
        Self::Coordinate(vec![1.0 / n as f64; n])
    }

    pub fn h2(beta_a: f64, beta_b: f64) -> Result<Self> {
        if !(beta_a > 0.0 && beta_b > 0.0) || !beta_a.is_finite() || !beta_b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Beta parameters must be positive, got ({beta_a}, {beta_b})"
            )));
        }
        Ok(Self::H2 { beta_a, beta_b })
    }

    pub fn h2_default() -> Self {
        Self::H2 {
            beta_a: 1.0,
            beta_b: 9.0,
        }
    }

    /// Draws a direction given the relevant precision (the target precision
    /// for exact Gibbs, the local Hessian for Metropolis–Hastings).
    pub fn sample<R: Rng + ?Sized>(&self, precision: &SymMatrix, rng: &mut R) -> Result<DirectionDraw> {
        PreparedLaw::new(self, precision)?.sample(rng)
    }

    /// Log weight of the line through `e` under this law at `precision`.
    ///
    /// Eigenvector laws identify `e` with the eigenvector of `precision`
    /// of largest `|⟨e, q⟩|` and return `None` when that overlap is below
    /// `min_overlap`; they also need the tempering exponent of the forward
    /// draw (`1` for `h1`).
    pub fn line_log_weight(
        &self,
        precision: &SymMatrix,
        e: &UnitDirection,
        tempering: Option<f64>,
        min_overlap: f64,
    ) -> Result<Option<f64>> {
        let n = precision.dim();
        if e.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: e.dim(),
            });
        }
        match self {
            Self::Coordinate(w) => {
                let hit = e.as_slice().iter().position(|x| (x.abs() - 1.0).abs() <= UNIT_TOL);
                let weight = |i: usize| if w.is_empty() { 1.0 / n as f64 } else { w[i] };
                Ok(hit.filter(|&i| weight(i) > 0.0).map(|i| weight(i).ln()))
            }
            Self::UniformSphere => Ok(Some(log_sphere_density(n))),
            Self::Angular => Ok(Some(angular_log_density(e, precision)?)),
            Self::HStar => {
                let log_k = if n == 2 {
                    k_h_numeric_2d(precision, K_H_DEFAULT_GRID)?.ln()
                } else {
                    0.0
                };
                Ok(Some(hstar_log_density(e, precision)? + log_k))
            }
            Self::H1 | Self::H2 { .. } => {
                let exponent = match self {
                    Self::H1 => 1.0,
                    _ => tempering.ok_or_else(|| {
                        Error::InvalidParameter("h2 weight needs the tempering exponent".into())
                    })?,
                };
                let eig = sym_eigen(precision)?;
                let (best, overlap) = (0..n)
                    .map(|k| (k, dot(&eig.vector(k), e.as_slice()).abs()))
                    .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
                if overlap < min_overlap {
                    return Ok(None);
                }
                Ok(Some(eigen_log_probabilities(eig.values(), exponent)[best]))
            }
        }
    }

    /// Short label used on the command line and in output files.
    pub fn label(&self) -> String {
        match self {
            Self::Coordinate(_) => "coord".to_string(),
            Self::UniformSphere => "sphere".to_string(),
            Self::HStar => "hstar".to_string(),
            Self::Angular => "angular".to_string(),
            Self::H1 => "h1".to_string(),
            Self::H2 { beta_a, beta_b } if *beta_a == 1.0 && *beta_b == 9.0 => "h2".to_string(),
            Self::H2 { beta_a, beta_b } => format!("h2={beta_a},{beta_b}"),
        }
    }
}

impl fmt::Display for DirectionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `coord | sphere | hstar | angular | h1 | h2 | h2=a,b`. Coordinate weights
/// are left empty and filled in as uniform once the dimension is known.
impl FromStr for DirectionLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "coord" => Ok(Self::Coordinate(Vec::new())),
            "sphere" => Ok(Self::UniformSphere),
            "hstar" => Ok(Self::HStar),
            "angular" => Ok(Self::Angular),
            "h1" => Ok(Self::H1),
            "h2" => Ok(Self::h2_default()),
            _ => {
                let params = s
                    .strip_prefix("h2=")
                    .ok_or_else(|| Error::Parse(format!("unknown direction law {s:?}")))?;
                let parts: Vec<&str> = params.split([',', ':']).collect();
                let [a, b] = parts.as_slice() else {
                    return Err(Error::Parse(format!("expected h2=a,b, got {s:?}")));
                };
                let parse = |t: &str| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad Beta parameter {t:?}")))
                };
                Self::h2(parse(a)?, parse(b)?)
            }
        }
    }
}

/// A direction law bound to a fixed precision, with its factorization cached.
#[derive(Debug, Clone)]
pub enum PreparedLaw {
    Coordinate(Vec<f64>),
    UniformSphere(usize),
    HStar {
        sampler: HStarSampler,
        precision: SymMatrix,
        /// `log K` for `n = 2`, zero otherwise.
        log_norm: f64,
    },
    Angular {
        factor: CholeskyFactor,
        precision: SymMatrix,
    },
    Eigen {
        eigen: EigenDecomposition,
        beta: Option<(f64, f64)>,
    },
}

impl PreparedLaw {
    pub fn new(law: &DirectionLaw, precision: &SymMatrix) -> Result<Self> {
        let n = precision.dim();
        Ok(match law {
            DirectionLaw::Coordinate(w) if w.is_empty() => {
                Self::Coordinate(vec![1.0 / n as f64; n])
            }
            DirectionLaw::Coordinate(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: w.len(),
                    });
                }
                validate_weights(w)?;
                Self::Coordinate(w.clone())
            }
            DirectionLaw::UniformSphere => Self::UniformSphere(n),
            DirectionLaw::HStar => Self::HStar {
                sampler: HStarSampler::new(precision)?,
                precision: precision.clone(),
                log_norm: if n == 2 {
                    k_h_numeric_2d(precision, K_H_DEFAULT_GRID)?.ln()
                } else {
                    0.0
                },
            },
            DirectionLaw::Angular => Self::Angular {
                factor: cholesky(precision)?,
                precision: precision.clone(),
            },
            DirectionLaw::H1 => Self::Eigen {
                eigen: sym_eigen(precision)?,
                beta: None,
            },
            DirectionLaw::H2 { beta_a, beta_b } => Self::Eigen {
                eigen: sym_eigen(precision)?,
                beta: Some((*beta_a, *beta_b)),
            },
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DirectionDraw> {
        match self {
            Self::Coordinate(w) => sample_coordinate(w, rng),
            Self::UniformSphere(n) => Ok(DirectionDraw {
                direction: sample_uniform_sphere(*n, rng),
                log_weight: log_sphere_density(*n),
                tempering: None,
            }),
            Self::HStar {
                sampler,
                precision,
                log_norm,
            } => {
                let e = sampler.sample(rng)?;
                Ok(DirectionDraw {
                    log_weight: hstar_log_density(&e, precision)? + log_norm,
                    direction: e,
                    tempering: None,
                })
            }
            Self::Angular { factor, precision } => {
                let e = sample_angular_with(factor, rng)?;
                let q = quadratic_form(e.as_slice(), precision)?;
                Ok(DirectionDraw {
                    log_weight: angular_log_density_parts(precision.dim(), factor.log_det(), q),
                    direction: e,
                    tempering: None,
                })
            }
            Self::Eigen { eigen, beta: None } => Ok(sample_eigen_tempered(eigen, 1.0, rng)),
            Self::Eigen {
                eigen,
                beta: Some((a, b)),
            } => {
                let exponent = draw_beta(*a, *b, rng)?;
                Ok(sample_eigen_tempered(eigen, exponent, rng))
            }
        }
    }
}

fn validate_weights(w: &[f64]) -> Result<()> {
    let total: f64 = w.iter().sum();
    if w.is_empty() || w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || (total - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidWeights);
    }
    Ok(())
}

fn draw_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let beta = Beta::new(a, b).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(beta.sample(rng))
}

/// `log` of the uniform density on the unit sphere in `R^n`.
fn log_sphere_density(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    -(2f64.ln() + half * PI.ln() - ln_gamma(half))
}

/// Draws a direction with density `∝ (eᵀAe)^(−1/2)` on the unit sphere.
pub fn sample_hstar<R: Rng + ?Sized>(a: &SymMatrix, rng: &mut R) -> Result<UnitDirection> {
    HStarSampler::new(a)?.sample(rng)
}

/// Exact sampler for `h*(e) ∝ (eᵀAe)^(−1/2)`.
///
/// Normalizing `N(0, B⁻¹)` draws gives the angular Gaussian law
/// `∝ (eᵀBe)^(−n/2)`. With `B = A^(1/n)` the ratio
/// `(eᵀBe)^(n/2) / (eᵀAe)^(1/2)` is at most 1 by the power-mean
/// inequality in the eigenbasis of `A`, so it serves directly as the
/// acceptance probability of a rejection step.
#[derive(Debug, Clone)]
pub struct HStarSampler {
    /// Eigenvectors of `A` as columns.
    basis: Matrix,
    /// `λ_i^(−1/(2n))`, the proposal standard deviations in the eigenbasis.
    scales: Vec<f64>,
    /// Eigenvalues divided by the largest one.
    lambda: Vec<f64>,
}

impl HStarSampler {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let eigen = sym_eigen(a)?;
        let n = a.dim();
        let values = eigen.values();
        if values.iter().any(|l| !(*l > 0.0)) {
            let (pivot, value) = values
                .iter()
                .enumerate()
                .find(|(_, l)| !(**l > 0.0))
                .map(|(i, l)| (i, *l))
                .unwrap();
            return Err(Error::NotPositiveDefinite { pivot, value });
        }
        let top = values.iter().cloned().fold(0.0, f64::max);
        let lambda: Vec<f64> = values.iter().map(|l| l / top).collect();
        let scales = lambda.iter().map(|l| l.powf(-0.5 / n as f64)).collect();
        Ok(Self {
            basis: eigen.vectors(),
            scales,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UnitDirection> {
        let n = self.dim();
        loop {
            // coordinates in the eigenbasis
            let c: Vec<f64> = self
                .scales
                .iter()
                .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let len = norm(&c);
            if !(len > 0.0) {
                continue;
            }
            let (mut qa, mut qb) = (0.0, 0.0);
            for (ci, li) in c.iter().zip(&self.lambda) {
                let w = (ci / len) * (ci / len);
                qa += w * li;
                qb += w * li.powf(1.0 / n as f64);
            }
            let log_accept = 0.5 * n as f64 * qb.ln() - 0.5 * qa.ln();
            if log_accept >= 0.0 || rng.random::<f64>().ln() < log_accept {
                let e = self.basis.mul_vec(&c)?;
                return UnitDirection::normalize(e);
            }
        }
    }
}

/// Draws `e_u ~ N(0, A⁻¹)` and returns `e_u / ‖e_u‖`.
pub fn sample_angular<R: Rng + ?Sized>(a: &SymMatrix, rng: &mut R) -> Result<UnitDirection> {
    sample_angular_with(&cholesky(a)?, rng)
}

/// As [`sample_angular`] with a precomputed Cholesky factor of `A`.
pub fn sample_angular_with<R: Rng + ?Sized>(
    factor: &CholeskyFactor,
    rng: &mut R,
) -> Result<UnitDirection> {
    loop {
        let z: Vec<f64> = (0..factor.dim()).map(|_| rng.sample(StandardNormal)).collect();
        // Lᵀ e_u = z  =>  Cov(e_u) = (L Lᵀ)⁻¹
        let eu = factor.solve_upper(&z)?;
        if norm(&eu) > 0.0 {
            return UnitDirection::normalize(eu);
        }
    }
}

/// Normalized log density of [`sample_angular`] with respect to surface
/// measure: `log Γ(n/2) − log 2π^(n/2) + ½ log|A| − (n/2) log eᵀAe`.
pub fn angular_log_density(e: &UnitDirection, a: &SymMatrix) -> Result<f64> {
    let q = quadratic_form(e.as_slice(), a)?;
    Ok(angular_log_density_parts(a.dim(), cholesky(a)?.log_det(), q))
}

fn angular_log_density_parts(n: usize, log_det: f64, q: f64) -> f64 {
    log_sphere_density(n) + 0.5 * log_det - 0.5 * n as f64 * q.ln()
}

/// Unnormalized `log h*(e) = −½ log eᵀAe`.
pub fn hstar_log_density(e: &UnitDirection, a: &SymMatrix) -> Result<f64> {
    Ok(-0.5 * quadratic_form(e.as_slice(), a)?.ln())
}

/// The constant `C₁ = C + n − ½` with
/// `C = ((n−1)/2) log 2π − ½ log|A|`.
pub fn mutual_information_constant(a: &SymMatrix) -> Result<f64> {
    let n = a.dim() as f64;
    let log_det = cholesky(a)?.log_det();
    let c = 0.5 * (n - 1.0) * (2.0 * PI).ln() - 0.5 * log_det;
    Ok(c + n - 0.5)
}

/// Mutual information between consecutive states of the exact Gibbs move
/// along `e` for a normal target with precision `A`: `C₁ + ½ log eᵀAe`.
pub fn mutual_information_gaussian(e: &UnitDirection, a: &SymMatrix) -> Result<f64> {
    let q = quadratic_form(e.as_slice(), a)?;
    Ok(mutual_information_constant(a)? + 0.5 * q.ln())
}

/// Normalizing constant `K_H` of `h*` on the unit circle:
/// `1/K_H = ∫₀^{2π} (e(θ)ᵀ H e(θ))^(−1/2) dθ`, trapezoid rule on `n_grid`
/// equispaced nodes.
pub fn k_h_numeric_2d(h: &SymMatrix, n_grid: usize) -> Result<f64> {
    if h.dim() != 2 {
        return Err(Error::UnsupportedDimension(h.dim()));
    }
    if n_grid == 0 {
        return Err(Error::InvalidParameter("n_grid must be positive".to_string()));
    }
    // e(θ)ᵀHe(θ) = m + d·cos 2θ + b·sin 2θ
    let (a, b, c) = (h.get(0, 0), h.get(0, 1), h.get(1, 1));
    let (m, d) = (0.5 * (a + c), 0.5 * (a - c));
    let eval = |(co, si): (f64, f64)| -> Result<f64> {
        let q = m + d * co + b * si;
        if !(q > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: 0, value: q });
        }
        Ok(1.0 / q.sqrt())
    };
    let mut sum = 0.0;
    if n_grid == K_H_DEFAULT_GRID {
        for &node in default_grid() {
            sum += eval(node)?;
        }
        // the integrand has period π, so each half-grid node counts twice
        sum *= 2.0;
    } else {
        let step = 2.0 * PI / n_grid as f64;
        for k in 0..n_grid {
            let (si, co) = (2.0 * k as f64 * step).sin_cos();
            sum += eval((co, si))?;
        }
    }
    Ok(n_grid as f64 / (2.0 * PI * sum))
}

/// `(cos 2θ_k, sin 2θ_k)` for the first half of the default grid.
fn default_grid() -> &'static [(f64, f64)] {
    static GRID: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    GRID.get_or_init(|| {
        let step = 2.0 * PI / K_H_DEFAULT_GRID as f64;
        (0..K_H_DEFAULT_GRID / 2)
            .map(|k| {
                let (s, c) = (2.0 * k as f64 * step).sin_cos();
                (c, s)
            })
            .collect()
    })
}

/// `log p_i` with `p_i ∝ λ_i^(−exponent)`.
pub fn eigen_log_probabilities(eigenvalues: &[f64], exponent: f64) -> Vec<f64> {
    let logits: Vec<f64> = eigenvalues.iter().map(|l| -exponent * l.ln()).collect();
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + logits.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
    logits.iter().map(|v| v - lse).collect()
}

/// Picks eigenvector `q_i` with probability `∝ λ_i^(−exponent)` and a
/// uniform random sign.
pub fn sample_eigen_tempered<R: Rng + ?Sized>(
    eigen: &EigenDecomposition,
    exponent: f64,
    rng: &mut R,
) -> DirectionDraw {
    let logp = eigen_log_probabilities(eigen.values(), exponent);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut index = logp.len() - 1;
    for (i, lp) in logp.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            index = i;
            break;
        }
    }
    let mut v = eigen.vector(index);
    if rng.random::<bool>() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    DirectionDraw {
        direction: UnitDirection(v),
        log_weight: logp[index],
        tempering: Some(exponent),
    }
}

/// Eigenvector law with probabilities `∝ λ_i^(−1)`.
pub fn sample_h1<R: Rng + ?Sized>(h: &SymMatrix, rng: &mut R) -> Result<DirectionDraw> {
    let mut draw = sample_eigen_tempered(&sym_eigen(h)?, 1.0, rng);
    draw.tempering = None;
    Ok(draw)
}

/// Eigenvector law with probabilities `∝ λ_i^(−b)`, `b ~ Beta(beta_a, beta_b)`
/// drawn fresh on every call.
pub fn sample_h2<R: Rng + ?Sized>(
    h: &SymMatrix,
    beta_a: f64,
    beta_b: f64,
    rng: &mut R,
) -> Result<DirectionDraw> {
    let eigen = sym_eigen(h)?;
    let exponent = draw_beta(beta_a, beta_b, rng)?;
    Ok(sample_eigen_tempered(&eigen, exponent, rng))
}

/// Random-scan coordinate direction: `e_i` with probability `w_i`.
pub fn sample_coordinate<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<DirectionDraw> {
    validate_weights(weights)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut index = None;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc && *w > 0.0 {
            index = Some(i);
            break;
        }
    }
    let index =
        index.unwrap_or_else(|| weights.iter().rposition(|w| *w > 0.0).expect("validated"));
    Ok(DirectionDraw {
        direction: UnitDirection::axis(weights.len(), index),
        log_weight: weights[index].ln(),
        tempering: None,
    })
}

/// Uniform direction: a normalized vector of independent standard normals.
pub fn sample_uniform_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> UnitDirection {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(e) = UnitDirection::normalize(v) {
            return e;
        }
    }
}
