//! Dense linear algebra for small symmetric problems.
//!
//! Everything here is sized for the dimensions the samplers work in (a few
//! dozen at most), so plain row-major `Vec<f64>` storage and textbook
//! algorithms are used throughout: Cholesky, cyclic Jacobi for the symmetric
//! eigenproblem and Householder QR for random orthonormal bases.

use rand::Rng;

use crate::error::{Error, Result};

/// Relative tolerance used when validating symmetry on construction.
pub const SYMMETRY_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// General dense row-major matrix (used for rectangular operators such as a
/// forward model).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len(cols, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_len(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, v.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Computes `selfᵀ · v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-abs distance between `selfᵀ·self` and the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.transpose().matmul(self).expect("square product");
        let mut err: f64 = 0.0;
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((gram.get(i, j) - target).abs());
            }
        }
        err
    }
}

/// Dense symmetric matrix, stored in full row-major form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Validates that `data` is an `n × n` symmetric matrix.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        check_len(n * n, data.len())?;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = data[i * n + j];
                let b = data[j * n + i];
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        Self::try_from(m)
    }

    /// Averages `m` with its transpose; used for matrices that are symmetric
    /// up to rounding because of how they were computed.
    pub fn symmetrized(m: &Matrix) -> Result<Self> {
        check_len(m.rows, m.cols)?;
        let n = m.rows;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = 0.5 * (m.get(i, j) + m.get(j, i));
            }
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, v.len())?;
        Ok((0..self.n).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        check_len(self.n, other.n)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { n: self.n, data })
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Returns `self + c · v vᵀ`.
    pub fn rank_one_update(&self, c: f64, v: &[f64]) -> Result<SymMatrix> {
        check_len(self.n, v.len())?;
        let mut data = self.data.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                data[i * self.n + j] += c * v[i] * v[j];
            }
        }
        Ok(Self { n: self.n, data })
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.n,
            cols: self.n,
            data: self.data.clone(),
        }
    }

    /// Max-abs entrywise distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl TryFrom<Matrix> for SymMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        check_len(m.rows, m.cols)?;
        Self::new(m.rows, m.data)
    }
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.n + j]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.get(i, k) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        Ok(y)
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, y.len())?;
        let mut x = y.to_vec();
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in (i + 1)..self.n {
                s -= self.get(k, i) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
        Ok(x)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_upper(&self.solve_lower(b)?)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }
}

pub fn cholesky(a: &SymMatrix) -> Result<CholeskyFactor> {
    let n = a.n;
    let mut lower = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= lower[j * n + k] * lower[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        lower[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= lower[i * n + k] * lower[j * n + k];
            }
            lower[i * n + j] = s / ljj;
        }
    }
    Ok(CholeskyFactor { n, lower })
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
///
/// Eigenvector columns are normalized so that their largest-magnitude
/// component is positive; near-ties (within `1e-12`) go to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    // row-major, column k is the k-th eigenvector
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }

    pub fn vectors(&self) -> Matrix {
        let n = self.dim();
        Matrix {
            rows: n,
            cols: n,
            data: self.vectors.clone(),
        }
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (0..n)
                    .map(|k| self.vectors[i * n + k] * self.values[k] * self.vectors[j * n + k])
                    .sum();
            }
        }
        SymMatrix { n, data }
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut v = Matrix::identity(n).data;

    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = n <= 1 || scale == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // below rounding level of both diagonal entries
                let g = 100.0 * apq.abs();
                if sweeps > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        converged = off <= f64::EPSILON * scale || off < f64::MIN_POSITIVE;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values: Vec<f64> = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        let mut q: Vec<f64> = (0..n).map(|i| v[i * n + k]).collect();
        let len = norm(&q);
        q.iter_mut().for_each(|x| *x /= len);
        let biggest = q.iter().fold(0.0f64, |b, x| b.max(x.abs()));
        let lead = q
            .iter()
            .position(|x| x.abs() >= biggest - 1e-12)
            .unwrap_or(0);
        let sign = if q[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i * n + col] = sign * q[i];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Square matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalMatrix(Matrix);

impl OrthonormalMatrix {
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    /// Wraps `m` after checking `‖mᵀm − I‖_max ≤ 1e−10`.
    pub fn new(m: Matrix) -> Result<Self> {
        check_len(m.rows, m.cols)?;
        if m.orthonormality_error() > 1e-10 {
            return Err(Error::InvalidParameter(
                "matrix is not orthonormal".to_string(),
            ));
        }
        Ok(Self(m))
    }
}

/// Householder QR of `a` (square); returns `(Q, diag(R))` with the sign of
/// each column of `Q` chosen so that `R` has a non-negative diagonal.
fn householder_q(a: &Matrix) -> (Matrix, Vec<f64>) {
    let n = a.rows;
    let mut r = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let x: Vec<f64> = (k..n).map(|i| r.get(i, k)).collect();
        let xnorm = norm(&x);
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm(&v);
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|t| *t /= vnorm);
        // R <- H R on rows k..n
        for j in k..n {
            let s: f64 = (k..n).map(|i| v[i - k] * r.get(i, j)).sum();
            for i in k..n {
                let val = r.get(i, j) - 2.0 * v[i - k] * s;
                r.set(i, j, val);
            }
        }
        // Q <- Q H on columns k..n
        for i in 0..n {
            let s: f64 = (k..n).map(|j| q.get(i, j) * v[j - k]).sum();
            for j in k..n {
                let val = q.get(i, j) - 2.0 * s * v[j - k];
                q.set(i, j, val);
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| r.get(i, i)).collect();
    for (j, d) in diag.iter().enumerate() {
        if *d < 0.0 {
            for i in 0..n {
                let val = -q.get(i, j);
                q.set(i, j, val);
            }
        }
    }
    (q, diag.iter().map(|d| d.abs()).collect())
}

/// Orthonormal factor of the QR decomposition of an `n × n` matrix with
/// independent Uniform[0, 1) entries.
pub fn random_orthonormal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OrthonormalMatrix {
    assert!(n >= 1, "dimension must be positive");
    loop {
        let data: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
        let a = Matrix { rows: n, cols: n, data };
        let (q, rdiag) = householder_q(&a);
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        if rdiag.iter().all(|d| *d > 1e-10 * scale) {
            return OrthonormalMatrix(q);
        }
    }
}

/// `eᵀ A e`.
pub fn quadratic_form(e: &[f64], a: &SymMatrix) -> Result<f64> {
    check_len(a.n, e.len())?;
    Ok((0..a.n).map(|i| e[i] * dot(a.row(i), e)).sum())
}

/// `Pᵀ diag(λ) P` with `λ_i = i^(2α/n)`, i.e. standard deviations
/// `σ_i = i^(−α/n)` along the rows of `P`.
pub fn build_benchmark_precision(n: usize, alpha: f64, p: &OrthonormalMatrix) -> SymMatrix {
    assert_eq!(p.dim(), n, "orthonormal basis has the wrong dimension");
    let lambdas = benchmark_eigenvalues(n, alpha);
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| p.get(k, i) * lambdas[k] * p.get(k, j)).sum();
            m.set(i, j, v);
        }
    }
    SymMatrix::symmetrized(&m).expect("square")
}

/// Precisions `λ_i = σ_i^(−2)` with `σ_i = i^(−α/n)`, `i = 1..n`.
pub fn benchmark_eigenvalues(n: usize, alpha: f64) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let sigma = (i as f64).powf(-alpha / n as f64);
            sigma.powi(-2)
        })
        .collect()
}

/// `E[zᵀ R z] = tr(R Σ) + μᵀ R μ` for `z` with mean `μ` and covariance `Σ`.
pub fn expected_quadratic_form(r: &SymMatrix, mu: &[f64], sigma: &SymMatrix) -> Result<f64> {
    check_len(r.n, sigma.n)?;
    check_len(r.n, mu.len())?;
    let n = r.n;
    let trace: f64 = (0..n)
        .map(|i| (0..n).map(|k| r.get(i, k) * sigma.get(k, i)).sum::<f64>())
        .sum();
    Ok(trace + quadratic_form(mu, r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sym(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        let data: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let m = Matrix::new(n, n, data).unwrap();
        let g = m.transpose().matmul(&m).unwrap();
        SymMatrix::symmetrized(&g)
            .unwrap()
            .add(&SymMatrix::identity(n).scaled(0.1))
            .unwrap()
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky(&SymMatrix::identity(2)).unwrap();
        assert_eq!(l.reconstruct(), SymMatrix::identity(2));
        assert_eq!(l.get(0, 0), 1.0);
        assert_eq!(l.get(1, 0), 0.0);
        assert_eq!(l.log_det(), 0.0);
    }

    #[test]
    fn cholesky_two_by_two() {
        let a = sym(&[&[4.0, 2.0], &[2.0, 5.0]]);
        let l = cholesky(&a).unwrap();
        assert_eq!(l.get(0, 0), 2.0);
        assert_eq!(l.get(1, 0), 1.0);
        assert_eq!(l.get(0, 1), 0.0);
        assert_eq!(l.get(1, 1), 2.0);
        // det = 16
        assert!((l.log_det() - 16f64.ln()).abs() < 1e-14);
        let x = l.solve(&[6.0, 7.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = sym(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            cholesky(&a),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn symmetry_is_validated() {
        let err = SymMatrix::new(2, vec![1.0, 0.5, 0.4, 1.0]).unwrap_err();
        assert_eq!(err, Error::NotSymmetric { row: 0, col: 1 });
        assert!(SymMatrix::new(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn eigen_of_diagonal() {
        let d = sym(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let eig = sym_eigen(&d).unwrap();
        assert_eq!(eig.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(eig.vector(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(eig.vector(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(eig.vector(2), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn eigen_of_two_by_two() {
        let a = sym(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let eig = sym_eigen(&a).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((eig.values()[0] - 1.0).abs() < 1e-14);
        assert!((eig.values()[1] - 3.0).abs() < 1e-14);
        // sign convention: largest component positive, tie -> lowest index
        let q1 = eig.vector(0);
        let q2 = eig.vector(1);
        assert!((q1[0] - s).abs() < 1e-14 && (q1[1] + s).abs() < 1e-14);
        assert!((q2[0] - s).abs() < 1e-14 && (q2[1] - s).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 12, 20] {
            let a = random_spd(n, &mut rng);
            let eig = sym_eigen(&a).unwrap();
            assert!(eig.vectors().orthonormality_error() <= 1e-10);
            assert!(eig.reconstruct().max_abs_diff(&a) <= 1e-8 * a.max_abs());
            assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
            for k in 0..n {
                let q = eig.vector(k);
                let lam = eig.values()[k];
                let qf = quadratic_form(&q, &a).unwrap();
                assert!((qf - lam).abs() <= 1e-8 * lam.abs());
            }
        }
    }

    #[test]
    fn random_orthonormal_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q1 = random_orthonormal(1, &mut rng);
        assert_eq!(q1.get(0, 0).abs(), 1.0);

        let q5 = random_orthonormal(5, &mut rng);
        assert!(q5.as_matrix().orthonormality_error() <= 1e-10);

        let a = random_orthonormal(3, &mut ChaCha8Rng::seed_from_u64(10));
        let b = random_orthonormal(3, &mut ChaCha8Rng::seed_from_u64(11));
        let c = random_orthonormal(3, &mut ChaCha8Rng::seed_from_u64(10));
        let diff = a
            .as_matrix()
            .as_slice()
            .iter()
            .zip(b.as_matrix().as_slice())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff > 1e-3);
        assert_eq!(a, c);
    }

    #[test]
    fn quadratic_forms() {
        let a = SymMatrix::from_diagonal(&[1.0, 4.0]);
        assert_eq!(quadratic_form(&[1.0, 0.0], &a).unwrap(), 1.0);
        assert_eq!(quadratic_form(&[0.0, 1.0], &a).unwrap(), 4.0);
        let b = sym(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((quadratic_form(&[s, s], &b).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(
            quadratic_form(&[1.0], &a),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn benchmark_precision_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_orthonormal(4, &mut rng);
        let a = build_benchmark_precision(4, 0.0, &p);
        assert!(a.max_abs_diff(&SymMatrix::identity(4)) < 1e-14);

        let l5 = benchmark_eigenvalues(5, 5.0);
        assert!((l5[4] - 25.0).abs() < 1e-12);
        let l10 = benchmark_eigenvalues(10, 20.0);
        assert!((l10[9] / l10[0] - 1e4).abs() < 1e-8);
    }

    #[test]
    fn benchmark_precision_spectrum_ignores_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &n in &[2usize, 3, 5, 10, 15, 20] {
            for &alpha in &[0.0, 5.0, 10.0, 20.0] {
                let p = random_orthonormal(n, &mut rng);
                let a = build_benchmark_precision(n, alpha, &p);
                let eig = sym_eigen(&a).unwrap();
                let want = benchmark_eigenvalues(n, alpha);
                for (got, want) in eig.values().iter().zip(&want) {
                    assert!(
                        (got - want).abs() <= 1e-8 * want,
                        "n={n} alpha={alpha}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn eigen_converges_on_badly_conditioned_benchmark_matrices() {
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (n, alpha) in [(20usize, 20.0), (15, 20.0), (5, 20.0), (3, 20.0), (2, 20.0)] {
                let p = random_orthonormal(n, &mut rng);
                let a = build_benchmark_precision(n, alpha, &p);
                let eig = sym_eigen(&a).unwrap();
                let want = benchmark_eigenvalues(n, alpha);
                for (got, w) in eig.values().iter().zip(&want) {
                    assert!((got - w).abs() <= 1e-8 * w.max(1.0), "{got} vs {w}");
                }
            }
        }
    }

    #[test]
    fn expected_quadratic_form_examples() {
        let i3 = SymMatrix::identity(3);
        assert_eq!(expected_quadratic_form(&i3, &[0.0; 3], &i3).unwrap(), 3.0);
        let r = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let v = expected_quadratic_form(&r, &[1.0, 1.0], &SymMatrix::identity(2)).unwrap();
        assert_eq!(v, 6.0);
        assert!(expected_quadratic_form(&r, &[1.0], &SymMatrix::identity(2)).is_err());
    }

    #[test]
    fn expected_quadratic_form_matches_monte_carlo() {
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in [2usize, 3, 4] {
            let r = random_spd(n, &mut rng);
            let sigma = random_spd(n, &mut rng);
            let mu: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let l = cholesky(&sigma).unwrap();
            let draws = 100_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..draws {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let x: Vec<f64> = (0..n)
                    .map(|i| mu[i] + (0..=i).map(|k| l.get(i, k) * z[k]).sum::<f64>())
                    .collect();
                let q = quadratic_form(&x, &r).unwrap();
                s += q;
                s2 += q * q;
            }
            let mean = s / draws as f64;
            let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
            let exact = expected_quadratic_form(&r, &mu, &sigma).unwrap();
            assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact} (se {se})");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn cholesky_round_trip(seed in any::<u64>(), n in 1usize..12) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_spd(n, &mut rng);
                let l = cholesky(&a).unwrap();
                prop_assert!(l.reconstruct().max_abs_diff(&a) <= 1e-10 * a.max_abs());
                for i in 0..n {
                    prop_assert!(l.get(i, i) > 0.0);
                    for j in (i + 1)..n {
                        prop_assert_eq!(l.get(i, j), 0.0);
                    }
                }
            }
        }
    }
}
