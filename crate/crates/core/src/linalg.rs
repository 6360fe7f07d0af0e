//! Dense linear-algebra kernel.
//!
//! Everything the solvers need from linear algebra lives here: a row-major
//! [`DenseMatrix`], Householder QR, QR-based pseudo-inverses and orthogonal
//! projectors, a one-sided Jacobi SVD for small blocks, a block power
//! iteration for truncated SVDs, and the Rayleigh–Ritz step that turns a pair
//! of factors into singular triples.
//!
//! All kernels are pure functions of their inputs.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::rng;

/// Relative threshold used by every "is this factor full rank" test:
/// `sigma_min <= RANK_TOL * max(rows, cols) * sigma_max` means rank deficient.
pub const RANK_TOL: f64 = 1e-12;

const SVD_MAX_SWEEPS: usize = 500;
const SVD_TOL: f64 = 1e-10;
const SVD_OVERSAMPLE: usize = 5;
const SVD_START_SEED: u64 = 0x5356_445f_424c_4b31;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Checked constructor: `data.len()` must equal `rows * cols` and every
    /// entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Unchecked (length-asserting) constructor used on freshly computed data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// Rectangular identity: ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Inverse of [`to_col_major`](Self::to_col_major).
    pub fn from_col_major(rows: usize, cols: usize, vec: &[f64]) -> Self {
        assert_eq!(vec.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| vec[j * rows + i])
    }

    /// `vec(X)`: columns stacked top to bottom.
    pub fn to_col_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.data[i * self.cols + j]);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = v;
        }
    }

    /// The leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> DenseMatrix {
        assert!(k <= self.cols);
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimensions differ");
        let n = rhs.cols;
        let mut out = Self::zeros(self.rows, n);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ * rhs` without forming the transpose.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, rhs.rows, "t_matmul: row counts differ");
        let (m, n) = (self.cols, rhs.cols);
        let mut out = Self::zeros(m, n);
        for k in 0..self.rows {
            let lhs_row = self.row(k);
            let rhs_row = rhs.row(k);
            for (i, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * rhsᵀ` without forming the transpose.
    pub fn matmul_t(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.cols, "matmul_t: column counts differ");
        let mut out = Self::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..rhs.rows {
                out.data[i * rhs.rows + j] = dot(a, rhs.row(j));
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        Self::from_vec(self.rows, self.cols, self.data.iter().map(|v| v * s).collect())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape(), "axpy: shapes differ");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "dot: shapes differ");
        dot(&self.data, &other.data)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        Self::from_vec(self.rows, self.cols, self.data.iter().map(|&v| f(v)).collect())
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &DenseMatrix {
    type Output = DenseMatrix;
    fn add(self, rhs: &DenseMatrix) -> DenseMatrix {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &DenseMatrix {
    type Output = DenseMatrix;
    fn sub(self, rhs: &DenseMatrix) -> DenseMatrix {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &DenseMatrix {
    type Output = DenseMatrix;
    fn mul(self, s: f64) -> DenseMatrix {
        self.scaled(s)
    }
}

impl Neg for &DenseMatrix {
    type Output = DenseMatrix;
    fn neg(self) -> DenseMatrix {
        self.scaled(-1.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Singular triple `u * diag(sigma) * vᵀ` with orthonormal `u`, `v` and
/// nonincreasing `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul_t(&self.v)
    }

    /// `max(‖b V − U Σ‖, ‖bᵀU − V Σ‖)` in Frobenius norm.
    fn residual(&self, b: &DenseMatrix) -> f64 {
        let scaled = |f: &DenseMatrix| DenseMatrix::from_fn(f.rows(), f.cols(), |i, j| f[(i, j)] * self.sigma[j]);
        let left = (&b.matmul(&self.v) - &scaled(&self.u)).norm();
        let right = (&b.t_matmul(&self.u) - &scaled(&self.v)).norm();
        left.max(right)
    }

    /// Flips column pairs so the first significant entry of every left vector
    /// is nonnegative.
    fn normalize_signs(&mut self) {
        for j in 0..self.u.cols() {
            let col = self.u.col(j);
            let first = col.iter().copied().find(|v| v.abs() > 1e-12).unwrap_or(0.0);
            if first < 0.0 {
                for i in 0..self.u.rows() {
                    self.u[(i, j)] = -self.u[(i, j)];
                }
                for i in 0..self.v.rows() {
                    self.v[(i, j)] = -self.v[(i, j)];
                }
            }
        }
    }
}

fn rank_deficient(sigma_min: f64, sigma_max: f64, rows: usize, cols: usize) -> bool {
    !(sigma_max > 0.0) || sigma_min <= RANK_TOL * rows.max(cols) as f64 * sigma_max
}

/// Economy Householder QR: `x = q * r` with `q` (m×n) orthonormal and `r`
/// (n×n) upper triangular with a nonnegative diagonal.
///
/// Rank-deficient inputs produce zeros on the diagonal of `r`.
pub fn qr_economy(x: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = x.shape();
    if n > m {
        return Err(Error::dims(format!("qr_economy needs cols <= rows, got {m}x{n}")));
    }
    let mut a = x.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<f64> = (j..m).map(|i| a[(i, j)]).collect();
        let norm = norm2(&v);
        if norm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm_sq = dot(&v, &v);
        if vnorm_sq == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        for c in j..n {
            let s: f64 = (j..m).map(|i| v[i - j] * a[(i, c)]).sum();
            let f = 2.0 * s / vnorm_sq;
            for i in j..m {
                a[(i, c)] -= f * v[i - j];
            }
        }
        let vn = vnorm_sq.sqrt();
        reflectors.push(v.into_iter().map(|e| e / vn).collect());
    }

    let mut r = DenseMatrix::from_fn(n, n, |i, k| if k >= i { a[(i, k)] } else { 0.0 });
    let mut q = DenseMatrix::eye(m, n);
    for j in (0..n).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        for c in 0..n {
            let s: f64 = (j..m).map(|i| v[i - j] * q[(i, c)]).sum();
            for i in j..m {
                q[(i, c)] -= 2.0 * s * v[i - j];
            }
        }
    }
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for k in 0..n {
                r[(i, k)] = -r[(i, k)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }
    Ok((q, r))
}

/// Thin SVD of a small dense matrix by one-sided (Hestenes) Jacobi rotations.
///
/// Returns `min(m, n)` triples. Zero singular values get orthonormal
/// completions so the factors always have orthonormal columns.
pub fn jacobi_svd(x: &DenseMatrix) -> Result<SvdTriple> {
    let (m, n) = x.shape();
    if m < n {
        let t = jacobi_svd(&x.transpose())?;
        let mut out = SvdTriple { u: t.v, sigma: t.sigma, v: t.u };
        out.normalize_signs();
        return Ok(out);
    }
    // column-major working copies
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| x.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    // columns below this squared norm are numerically zero; rotating them
    // against each other only shuffles rounding noise
    let negligible_sq = (f64::EPSILON * x.norm()).powi(2);
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0
                    || gamma.abs() <= 1e-15 * (alpha * beta).sqrt()
                    || alpha.min(beta) <= negligible_sq
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { what: "jacobi svd", iterations: JACOBI_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = a.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let smax = sig.iter().cloned().fold(0.0, f64::max);

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut v_out = DenseMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let s = sig[j];
        let negligible = s <= f64::EPSILON * smax * (m as f64) || s == 0.0;
        sigma.push(if negligible && s == 0.0 { 0.0 } else { s });
        let col = if negligible { None } else { Some(a[j].iter().map(|e| e / s).collect::<Vec<_>>()) };
        u_cols.push(col.unwrap_or_default());
        v_out.set_col(k, &v[j]);
    }
    complete_orthonormal(&mut u_cols, m);
    let mut u = DenseMatrix::zeros(m, n);
    for (k, c) in u_cols.iter().enumerate() {
        u.set_col(k, c);
    }
    let mut out = SvdTriple { u, sigma, v: v_out };
    out.normalize_signs();
    Ok(out)
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Replaces empty entries of `cols` by unit vectors orthogonal to the rest
/// (modified Gram–Schmidt over the standard basis).
fn complete_orthonormal(cols: &mut [Vec<f64>], dim: usize) {
    let mut basis_idx = 0;
    for k in 0..cols.len() {
        if !cols[k].is_empty() {
            continue;
        }
        loop {
            assert!(basis_idx < dim, "cannot complete orthonormal basis");
            let mut e = vec![0.0; dim];
            e[basis_idx] = 1.0;
            basis_idx += 1;
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let d = dot(&e, other);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= d * o;
                    }
                }
            }
            let nrm = norm2(&e);
            if nrm > 1e-8 {
                cols[k] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Extreme singular values `(sigma_min, sigma_max)` over all `min(m, n)`
/// singular values, so `sigma_min` may be zero.
pub fn singular_extremes(x: &DenseMatrix) -> Result<(f64, f64)> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let sigma = if m >= n {
        let (_, r) = qr_economy(x)?;
        jacobi_svd(&r)?.sigma
    } else {
        let (_, r) = qr_economy(&x.transpose())?;
        jacobi_svd(&r)?.sigma
    };
    Ok((*sigma.last().unwrap(), sigma[0]))
}

/// `x† = (xᵀx)⁻¹xᵀ` for a full-column-rank `x`, computed as `R⁻¹Qᵀ`.
pub fn pseudo_inverse(x: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = x.shape();
    if n > m {
        let (smin, smax) = singular_extremes(x)?;
        return Err(Error::RankDeficient { sigma_min: smin.min(0.0), sigma_max: smax });
    }
    let (q, r) = qr_economy(x)?;
    let sig = jacobi_svd(&r)?.sigma;
    let (smin, smax) = (*sig.last().unwrap(), sig[0]);
    if rank_deficient(smin, smax, m, n) {
        return Err(Error::RankDeficient { sigma_min: smin, sigma_max: smax });
    }
    // Back substitution for R X = Qᵀ, one row of X at a time.
    let qt = q.transpose();
    let mut out = DenseMatrix::zeros(n, m);
    for i in (0..n).rev() {
        let mut row = qt.row(i).to_vec();
        for k in (i + 1)..n {
            let rik = r[(i, k)];
            if rik != 0.0 {
                for (x, &y) in row.iter_mut().zip(out.row(k)) {
                    *x -= rik * y;
                }
            }
        }
        let d = r[(i, i)];
        for (j, x) in row.into_iter().enumerate() {
            out[(i, j)] = x / d;
        }
    }
    Ok(out)
}

/// `P_x m` (or `(I - P_x) m` when `complement` is set) with `P_x = x x†`.
pub fn project(x: &DenseMatrix, m: &DenseMatrix, complement: bool) -> Result<DenseMatrix> {
    if x.rows() != m.rows() {
        return Err(Error::dims(format!(
            "projector onto range of a {}-row matrix applied to {} rows",
            x.rows(),
            m.rows()
        )));
    }
    let pinv = pseudo_inverse(x)?;
    let p = x.matmul(&pinv.matmul(m));
    Ok(if complement { m - &p } else { p })
}

/// Best rank-`r` approximation of `b` by block power (subspace) iteration
/// with a Rayleigh–Ritz extraction after every sweep.
///
/// The block carries a few extra columns to speed up convergence; iteration
/// stops once `‖b V − U Σ‖` and `‖bᵀU − V Σ‖` fall below `1e-10 σ₁`.
pub fn truncated_svd(b: &DenseMatrix, r: usize) -> Result<SvdTriple> {
    let (m, n) = b.shape();
    let full = m.min(n);
    if r == 0 || r > full {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={full}")));
    }
    let k = (r + SVD_OVERSAMPLE).min(full);
    let mut rng = rng::seeded(SVD_START_SEED);
    let (mut qv, _) = qr_economy(&rng::gaussian_matrix(n, k, &mut rng))?;

    for _ in 0..SVD_MAX_SWEEPS {
        let (qu, _) = qr_economy(&b.matmul(&qv))?;
        let (qv_next, _) = qr_economy(&b.t_matmul(&qu))?;
        qv = qv_next;
        let small = qu.t_matmul(&b.matmul(&qv));
        let svd = jacobi_svd(&small)?;
        let out = SvdTriple {
            u: qu.matmul(&svd.u.leading_cols(r)),
            sigma: svd.sigma[..r].to_vec(),
            v: qv.matmul(&svd.v.leading_cols(r)),
        };
        if k == full || out.residual(b) <= SVD_TOL * out.sigma[0].max(f64::MIN_POSITIVE) {
            let mut out = out;
            out.normalize_signs();
            return Ok(out);
        }
    }
    Err(Error::ConvergenceFailure { what: "truncated svd", iterations: SVD_MAX_SWEEPS })
}

/// Orthonormalizes a factor pair against `b`: QR of both factors, SVD of the
/// small projected block `Q_uᵀ b Q_v`, then rotation back.
pub fn rayleigh_ritz(u: &DenseMatrix, v: &DenseMatrix, b: &DenseMatrix) -> Result<SvdTriple> {
    if u.cols() != v.cols() || u.rows() != b.rows() || v.rows() != b.cols() {
        return Err(Error::dims(format!(
            "rayleigh_ritz: u {:?}, v {:?}, b {:?}",
            u.shape(),
            v.shape(),
            b.shape()
        )));
    }
    let (qu, ru) = qr_economy(u)?;
    let (qv, rv) = qr_economy(v)?;
    for (f, rf) in [(u, &ru), (v, &rv)] {
        let (smin, smax) = diag_extremes(rf);
        if rank_deficient(smin, smax, f.rows(), f.cols()) {
            return Err(Error::RankDeficient { sigma_min: smin, sigma_max: smax });
        }
    }
    let small = qu.t_matmul(&b.matmul(&qv));
    let svd = jacobi_svd(&small)?;
    let mut out = SvdTriple { u: qu.matmul(&svd.u), sigma: svd.sigma, v: qv.matmul(&svd.v) };
    out.normalize_signs();
    Ok(out)
}

fn diag_extremes(r: &DenseMatrix) -> (f64, f64) {
    (0..r.rows()).fold((f64::INFINITY, 0.0), |(lo, hi), i| {
        let d = r[(i, i)].abs();
        (lo.min(d), hi.max(d))
    })
}

/// Cholesky factor of a small symmetric positive definite matrix.
pub(crate) struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub(crate) fn new(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::RankDeficient { sigma_min: d.max(0.0), sigma_max: a.max_abs() });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    /// Solves `X * A = rhs`, i.e. returns `rhs * A⁻¹` (A symmetric).
    pub(crate) fn solve_right(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let n = self.l.rows();
        assert_eq!(rhs.cols(), n);
        let mut out = rhs.clone();
        for row in 0..rhs.rows() {
            let x = &mut out.data[row * n..(row + 1) * n];
            // A x = b with A = L Lᵀ, applied to each row treated as a vector.
            for i in 0..n {
                let mut s = x[i];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[k];
                }
                x[i] = s / self.l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = x[i];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)] * x[k];
                }
                x[i] = s / self.l[(i, i)];
            }
        }
        out
    }
}
