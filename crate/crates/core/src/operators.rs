//! Linear measurement maps `A: R^{m×n} -> R^l` and their adjoints.
//!
//! Dense operators act on the column-major vectorization of their input, so
//! row `i` of a dense operator matrix holds `vec(A_i)`.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::rng;

const POWER_MAX_ITERS: usize = 300;
const POWER_TOL: f64 = 1e-9;
const LANCZOS_MAX_STEPS: usize = 300;
const LANCZOS_TOL: f64 = 1e-13;

/// Sorted, duplicate-free set of `(row, col)` positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet {
    entries: Vec<(usize, usize)>,
}

impl IndexSet {
    /// Sorts `entries` lexicographically; rejects duplicates.
    pub fn new(mut entries: Vec<(usize, usize)>) -> Result<Self> {
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate index {:?}", w[0])));
        }
        Ok(Self { entries })
    }

    /// Every position of an `m×n` matrix.
    pub fn full(m: usize, n: usize) -> Self {
        Self { entries: (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect() }
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().copied()
    }

    pub fn contains(&self, pos: (usize, usize)) -> bool {
        self.entries.binary_search(&pos).is_ok()
    }

    /// Position in the sorted order, if present.
    pub fn position(&self, pos: (usize, usize)) -> Option<usize> {
        self.entries.binary_search(&pos).ok()
    }

    pub fn fits(&self, m: usize, n: usize) -> bool {
        self.entries.iter().all(|&(i, j)| i < m && j < n)
    }
}

/// `round(fraction * m * n)` positions drawn uniformly without replacement.
pub fn sample_index_set(m: usize, n: usize, fraction: f64, seed: u64) -> Result<IndexSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside (0, 1]")));
    }
    let total = m * n;
    let count = ((fraction * total as f64).round() as usize).min(total);
    let mut rng = rng::seeded(seed);
    let mut flat = rand::seq::index::sample(&mut rng, total, count).into_vec();
    flat.sort_unstable();
    // flat positions are row-major, so sorting them sorts (row, col) pairs
    Ok(IndexSet { entries: flat.into_iter().map(|p| (p / n, p % n)).collect() })
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    /// `l × (m·n)` matrix acting on `vec(X)`.
    Dense(DenseMatrix),
    Selection(IndexSet),
    /// Row-compressed sparse matrix acting on `vec(X)`.
    SparseGaussian { rows: Vec<Vec<(usize, f64)>>, density: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    kind: OperatorKind,
    m: usize,
    n: usize,
    l: usize,
}

impl LinearOperator {
    pub fn identity(m: usize, n: usize) -> Self {
        Self { kind: OperatorKind::Identity, m, n, l: m * n }
    }

    pub fn dense(m: usize, n: usize, a: DenseMatrix) -> Result<Self> {
        if a.cols() != m * n {
            return Err(Error::dims(format!(
                "dense operator has {} columns, expected m*n = {}",
                a.cols(),
                m * n
            )));
        }
        let l = a.rows();
        Ok(Self { kind: OperatorKind::Dense(a), m, n, l })
    }

    /// `randn(l, m·n) / sqrt(l)`.
    pub fn dense_gaussian(m: usize, n: usize, l: usize, seed: u64) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("l must be positive".into()));
        }
        let mut rng = rng::seeded(seed);
        let a = rng::gaussian_matrix(l, m * n, &mut rng).scaled(1.0 / (l as f64).sqrt());
        Self::dense(m, n, a)
    }

    pub fn selection(m: usize, n: usize, omega: IndexSet) -> Result<Self> {
        if !omega.fits(m, n) {
            return Err(Error::dims(format!("index set does not fit a {m}x{n} matrix")));
        }
        let l = omega.len();
        Ok(Self { kind: OperatorKind::Selection(omega), m, n, l })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn in_rows(&self) -> usize {
        self.m
    }

    pub fn in_cols(&self) -> usize {
        self.n
    }

    pub fn out_len(&self) -> usize {
        self.l
    }

    pub fn index_set(&self) -> Option<&IndexSet> {
        match &self.kind {
            OperatorKind::Selection(o) => Some(o),
            _ => None,
        }
    }

    /// Identity and selection maps satisfy `A A* = I`.
    pub fn is_coordinate(&self) -> bool {
        matches!(self.kind, OperatorKind::Identity | OperatorKind::Selection(_))
    }

    pub fn apply(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        if x.shape() != (self.m, self.n) {
            return Err(Error::dims(format!(
                "operator expects {}x{}, got {}x{}",
                self.m,
                self.n,
                x.rows(),
                x.cols()
            )));
        }
        Ok(match &self.kind {
            OperatorKind::Identity => x.to_col_major(),
            OperatorKind::Selection(omega) => omega.iter().map(|p| x[p]).collect(),
            OperatorKind::Dense(a) => {
                let v = x.to_col_major();
                (0..self.l).map(|i| dot(a.row(i), &v)).collect()
            }
            OperatorKind::SparseGaussian { rows, .. } => {
                let v = x.to_col_major();
                rows.iter().map(|row| row.iter().map(|&(c, a)| a * v[c]).sum()).collect()
            }
        })
    }

    /// `A(U Vᵀ)` without forming the product when only a few entries are
    /// needed.
    pub fn apply_product(&self, u: &DenseMatrix, v: &DenseMatrix) -> Result<Vec<f64>> {
        if u.rows() != self.m || v.rows() != self.n || u.cols() != v.cols() {
            return Err(Error::dims(format!(
                "factors {:?} and {:?} do not match a {}x{} operator",
                u.shape(),
                v.shape(),
                self.m,
                self.n
            )));
        }
        match &self.kind {
            OperatorKind::Selection(omega) => {
                Ok(omega.iter().map(|(i, j)| dot(u.row(i), v.row(j))).collect())
            }
            _ => self.apply(&u.matmul_t(v)),
        }
    }

    pub fn adjoint(&self, y: &[f64]) -> Result<DenseMatrix> {
        if y.len() != self.l {
            return Err(Error::dims(format!("adjoint expects length {}, got {}", self.l, y.len())));
        }
        Ok(match &self.kind {
            OperatorKind::Identity => DenseMatrix::from_col_major(self.m, self.n, y),
            OperatorKind::Selection(omega) => {
                let mut out = DenseMatrix::zeros(self.m, self.n);
                for (p, &val) in omega.iter().zip(y) {
                    out[p] = val;
                }
                out
            }
            OperatorKind::Dense(a) => {
                let mut acc = vec![0.0; self.m * self.n];
                for (i, &yi) in y.iter().enumerate() {
                    if yi == 0.0 {
                        continue;
                    }
                    for (o, &aij) in acc.iter_mut().zip(a.row(i)) {
                        *o += yi * aij;
                    }
                }
                DenseMatrix::from_col_major(self.m, self.n, &acc)
            }
            OperatorKind::SparseGaussian { rows, .. } => {
                let mut acc = vec![0.0; self.m * self.n];
                for (row, &yi) in rows.iter().zip(y) {
                    for &(c, a) in row {
                        acc[c] += a * yi;
                    }
                }
                DenseMatrix::from_col_major(self.m, self.n, &acc)
            }
        })
    }

    /// Operator norm `‖A‖`.
    ///
    /// Coordinate maps return exactly 1. Other kinds run the power method on
    /// `A*A` from the normalized all-ones vector until the Rayleigh quotient
    /// settles.
    pub fn estimate_norm(&self) -> Result<f64> {
        match &self.kind {
            OperatorKind::Identity => return Ok(1.0),
            OperatorKind::Selection(omega) => {
                return if omega.is_empty() {
                    Err(Error::InvalidArgument("empty selection has zero norm".into()))
                } else {
                    Ok(1.0)
                };
            }
            _ => {}
        }
        let dim = self.m * self.n;
        let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut prev = f64::NAN;
        for _ in 0..POWER_MAX_ITERS {
            let ax = self.apply(&DenseMatrix::from_col_major(self.m, self.n, &x))?;
            let rq = dot(&ax, &ax);
            let y = self.adjoint(&ax)?.to_col_major();
            let ny = norm2(&y);
            if ny == 0.0 {
                if rq == 0.0 && prev.is_nan() {
                    return Err(Error::InvalidArgument("operator annihilates the start vector".into()));
                }
                return Ok(rq.sqrt());
            }
            if (rq - prev).abs() <= POWER_TOL * rq {
                return Ok(rq.sqrt());
            }
            prev = rq;
            x = y.into_iter().map(|e| e / ny).collect();
        }
        Err(Error::ConvergenceFailure { what: "power method", iterations: POWER_MAX_ITERS })
    }

    /// `‖A‖` from Lanczos on `A*A` with full reorthogonalization, started
    /// from the normalized all-ones vector. Converges on clustered spectra
    /// where the power method stalls.
    pub fn lanczos_norm(&self) -> Result<f64> {
        let dim = self.m * self.n;
        let steps = dim.min(LANCZOS_MAX_STEPS);
        let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (dim as f64).sqrt(); dim]];
        let (mut alphas, mut betas) = (Vec::new(), Vec::new());
        let mut prev = f64::NAN;
        for j in 0..steps {
            let q = &basis[j];
            let aq = self.apply(&DenseMatrix::from_col_major(self.m, self.n, q))?;
            let mut w = self.adjoint(&aq)?.to_col_major();
            alphas.push(dot(q, &w));
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let beta = norm2(&w);
            let k = alphas.len();
            let t = DenseMatrix::from_fn(k, k, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c {
                    betas[r]
                } else if c + 1 == r {
                    betas[c]
                } else {
                    0.0
                }
            });
            let theta = crate::linalg::jacobi_svd(&t)?.sigma[0];
            let settled = (theta - prev).abs() <= LANCZOS_TOL * theta;
            if settled || beta <= LANCZOS_TOL * theta || j + 1 == steps {
                if theta == 0.0 {
                    return Err(Error::InvalidArgument("operator annihilates the start vector".into()));
                }
                return Ok(theta.sqrt());
            }
            prev = theta;
            betas.push(beta);
            basis.push(w.into_iter().map(|x| x / beta).collect());
        }
        Err(Error::ConvergenceFailure { what: "lanczos", iterations: steps })
    }
}

/// Sparse sensing operator with Bernoulli(`density`) support and
/// `N(0, 1) / sqrt(l)` values.
pub fn make_sparse_gaussian(m: usize, n: usize, l: usize, density: f64, seed: u64) -> Result<LinearOperator> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {density} outside (0, 1]")));
    }
    if l == 0 {
        return Err(Error::InvalidArgument("l must be positive".into()));
    }
    let scale = 1.0 / (l as f64).sqrt();
    let mut rng = rng::seeded(seed);
    let rows = (0..l)
        .map(|_| {
            (0..m * n)
                .filter_map(|c| {
                    let keep = density >= 1.0 || rng.random::<f64>() < density;
                    keep.then(|| (c, scale * rng::normal(&mut rng)))
                })
                .collect()
        })
        .collect();
    Ok(LinearOperator { kind: OperatorKind::SparseGaussian { rows, density, seed }, m, n, l })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_matrix() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]])
    }

    #[test]
    fn identity_vectorizes_column_major() {
        let op = LinearOperator::identity(2, 2);
        assert_eq!(op.apply(&sample_matrix()).unwrap(), vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(op.adjoint(&[1.0, 3.0, 2.0, 4.0]).unwrap(), sample_matrix());
    }

    #[test]
    fn selection_gathers_and_scatters() {
        let omega = IndexSet::new(vec![(1, 1), (0, 0)]).unwrap();
        let op = LinearOperator::selection(2, 2, omega).unwrap();
        assert_eq!(op.apply(&sample_matrix()).unwrap(), vec![1.0, 4.0]);

        let op = LinearOperator::selection(2, 2, IndexSet::new(vec![(0, 1)]).unwrap()).unwrap();
        assert_eq!(op.adjoint(&[7.0]).unwrap(), DenseMatrix::from_rows(&[&[0.0, 7.0], &[0.0, 0.0]]));
    }

    #[test]
    fn dimension_checks() {
        let op = LinearOperator::identity(2, 2);
        assert!(matches!(op.apply(&DenseMatrix::zeros(2, 3)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(op.adjoint(&[1.0]), Err(Error::DimensionMismatch(_))));
        let omega = IndexSet::new(vec![(2, 0)]).unwrap();
        assert!(LinearOperator::selection(2, 2, omega).is_err());
        assert!(LinearOperator::dense(2, 2, DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn index_set_rejects_duplicates_and_sorts() {
        assert!(IndexSet::new(vec![(0, 1), (0, 1)]).is_err());
        let s = IndexSet::new(vec![(1, 0), (0, 2), (0, 1)]).unwrap();
        assert_eq!(s.entries(), &[(0, 1), (0, 2), (1, 0)]);
        assert_eq!(s.position((0, 2)), Some(1));
        assert!(!s.contains((1, 1)));
    }

    #[test]
    fn dense_identity_rows_match_identity_kind() {
        let dense = LinearOperator::dense(3, 2, DenseMatrix::identity(6)).unwrap();
        let id = LinearOperator::identity(3, 2);
        let x = rng::gaussian_matrix(3, 2, &mut rng::seeded(4));
        assert_eq!(dense.apply(&x).unwrap(), id.apply(&x).unwrap());
        let y = rng::normal_vec(6, &mut rng::seeded(5));
        assert_eq!(dense.adjoint(&y).unwrap(), id.adjoint(&y).unwrap());
    }

    #[test]
    fn apply_product_matches_apply() {
        let mut r = rng::seeded(8);
        let u = rng::gaussian_matrix(5, 2, &mut r);
        let v = rng::gaussian_matrix(4, 2, &mut r);
        let omega = sample_index_set(5, 4, 0.4, 3).unwrap();
        for op in [
            LinearOperator::selection(5, 4, omega).unwrap(),
            LinearOperator::dense_gaussian(5, 4, 7, 2).unwrap(),
        ] {
            let a = op.apply_product(&u, &v).unwrap();
            let b = op.apply(&u.matmul_t(&v)).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coordinate_norms_are_exactly_one() {
        assert_eq!(LinearOperator::identity(3, 4).estimate_norm().unwrap(), 1.0);
        let omega = sample_index_set(3, 4, 0.5, 1).unwrap();
        assert_eq!(LinearOperator::selection(3, 4, omega).unwrap().estimate_norm().unwrap(), 1.0);
        let empty = LinearOperator::selection(3, 4, IndexSet::default()).unwrap();
        assert!(empty.estimate_norm().is_err());
    }

    #[test]
    fn sample_sizes_are_rounded() {
        assert_eq!(sample_index_set(2, 2, 0.5, 9).unwrap().len(), 2);
        assert_eq!(sample_index_set(3, 3, 1.0, 9).unwrap(), IndexSet::full(3, 3));
        assert!(sample_index_set(3, 3, 0.0, 9).is_err());
    }

    #[test]
    fn sparse_gaussian_full_density_is_dense() {
        let op = make_sparse_gaussian(2, 2, 4, 1.0, 6).unwrap();
        if let OperatorKind::SparseGaussian { rows, .. } = op.kind() {
            assert!(rows.iter().all(|r| r.len() == 4));
        } else {
            panic!("wrong kind");
        }
        assert!(make_sparse_gaussian(2, 2, 4, 0.0, 6).is_err());
    }

    #[test]
    fn lanczos_matches_svd_oracle_on_clustered_spectrum() {
        let op = LinearOperator::dense_gaussian(8, 8, 48, 11).unwrap();
        let OperatorKind::Dense(a) = op.kind() else { unreachable!() };
        let a = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.data());
        let oracle = (&a * a.transpose()).symmetric_eigen().eigenvalues.max().sqrt();
        let est = op.lanczos_norm().unwrap();
        assert!((est - oracle).abs() <= 1e-10 * oracle, "{est} vs {oracle}");
    }
}
