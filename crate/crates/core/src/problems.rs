//! Synthetic instances and matrix-completion quality metrics.

use rand::Rng as _;

use crate::direction::FactorPair;
use crate::error::{Error, Result};
use crate::linalg::{qr_economy, DenseMatrix};
use crate::objectives::Problem;
use crate::operators::{make_sparse_gaussian, sample_index_set, IndexSet, LinearOperator};
use crate::rng;

// Independent streams derived from one user seed.
const OMEGA_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const OPERATOR_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

/// Integer matrix-completion instance: `M = UVᵀ` with factor entries in
/// `{1, …, 5}`, observed on `omega` with optional Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct McInstance {
    pub ground_truth: FactorPair,
    pub omega: IndexSet,
    pub b: Vec<f64>,
    pub noise_sigma: f64,
}

impl McInstance {
    pub fn m(&self) -> usize {
        self.ground_truth.u.rows()
    }

    pub fn n(&self) -> usize {
        self.ground_truth.v.rows()
    }

    pub fn rank(&self) -> usize {
        self.ground_truth.rank()
    }

    pub fn operator(&self) -> LinearOperator {
        LinearOperator::selection(self.m(), self.n(), self.omega.clone()).expect("omega fits by construction")
    }

    /// Least-squares completion problem at the instance's rank.
    pub fn problem(&self) -> Result<Problem> {
        Problem::least_squares(self.operator(), self.b.clone(), self.rank())
    }
}

pub fn gen_mc_integer(m: usize, n: usize, r: usize, fraction: f64, sigma: f64, seed: u64) -> Result<McInstance> {
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={}", m.min(n))));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} must be a finite nonnegative number")));
    }
    let mut g = rng::seeded(seed);
    let mut randi = |rows: usize| DenseMatrix::from_fn(rows, r, |_, _| g.random_range(1..=5) as f64);
    let u = randi(m);
    let v = randi(n);
    let omega = sample_index_set(m, n, fraction, seed ^ OMEGA_STREAM)?;
    let mut noise = rng::seeded(seed.wrapping_add(1));
    let b = omega
        .iter()
        .map(|(i, j)| {
            let clean: f64 = u.row(i).iter().zip(v.row(j)).map(|(a, b)| a * b).sum();
            if sigma > 0.0 {
                clean + sigma * rng::normal(&mut noise)
            } else {
                clean
            }
        })
        .collect();
    Ok(McInstance { ground_truth: FactorPair { u, v }, omega, b, noise_sigma: sigma })
}

/// Random orthonormal `rows × cols` factor.
pub fn random_orthonormal(rows: usize, cols: usize, g: &mut rng::Rng) -> Result<DenseMatrix> {
    Ok(qr_economy(&rng::gaussian_matrix(rows, cols, g))?.0)
}

/// Clean rank-`r` matrix with singular values `i^{-0.01}` plus dense
/// Gaussian noise scaled to 10% of its Frobenius norm.
///
/// Returns the noisy matrix, the clean part and the prescribed spectrum.
pub fn gen_lowrank_clustered(m: usize, n: usize, r: usize, seed: u64) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={}", m.min(n))));
    }
    let mut g = rng::seeded(seed);
    let u = random_orthonormal(m, r, &mut g)?;
    let v = random_orthonormal(n, r, &mut g)?;
    let sigma: Vec<f64> = (1..=r).map(|i| (i as f64).powf(-0.01)).collect();
    let clean = u.matmul(&DenseMatrix::diag(&sigma)).matmul_t(&v);
    let noise = rng::gaussian_matrix(m, n, &mut g);
    let mut b = clean.clone();
    b.axpy(0.1 * clean.norm() / noise.norm(), &noise);
    Ok((b, clean, sigma))
}

/// Gaussian rank-`r` matrix `L` plus `±magnitude` spikes on a `fraction` of
/// the entries. Returns `(L + S, L)`.
pub fn gen_sparse_spikes(
    m: usize,
    n: usize,
    r: usize,
    fraction: f64,
    magnitude: f64,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={}", m.min(n))));
    }
    let mut g = rng::seeded(seed);
    let low = rng::gaussian_matrix(m, r, &mut g).matmul_t(&rng::gaussian_matrix(n, r, &mut g));
    let mut b = low.clone();
    for (i, j) in sample_index_set(m, n, fraction, seed ^ OMEGA_STREAM)?.iter() {
        b[(i, j)] += if g.random::<bool>() { magnitude } else { -magnitude };
    }
    Ok((b, low))
}

/// Symmetric test matrices of size `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetricKind {
    /// `U♮U♮ᵀ` with a Gaussian `m × r` factor.
    Psd,
    /// Random eigenvectors with eigenvalues `r, …, 1, −1, …, −r` and zeros;
    /// needs `2r ≤ m`.
    Indefinite,
}

pub fn gen_symmetric(m: usize, r: usize, kind: SymmetricKind, seed: u64) -> Result<DenseMatrix> {
    if r == 0 || r > m {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={m}")));
    }
    let mut g = rng::seeded(seed);
    match kind {
        SymmetricKind::Psd => {
            let u = rng::gaussian_matrix(m, r, &mut g);
            Ok(u.matmul_t(&u))
        }
        SymmetricKind::Indefinite => {
            if 2 * r > m {
                return Err(Error::InvalidArgument(format!("indefinite matrix of size {m} needs rank <= {}", m / 2)));
            }
            let q = random_orthonormal(m, 2 * r, &mut g)?;
            let lambda: Vec<f64> = (0..r).map(|i| (r - i) as f64).chain((1..=r).map(|i| -(i as f64))).collect();
            let b = q.matmul(&DenseMatrix::diag(&lambda)).matmul_t(&q);
            Ok((&b + &b.transpose()).scaled(0.5))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensingKind {
    DenseGaussian,
    SparseGaussian { density: f64 },
}

#[derive(Debug, Clone)]
pub struct SensingInstance {
    pub problem: Problem,
    pub truth: FactorPair,
    /// `l < r(m + n)`.
    pub underdetermined: bool,
}

/// `B = A(U♮V♮ᵀ) + σ·N(0, I)` with Gaussian factors and a random sensing map.
pub fn gen_sensing(
    m: usize,
    n: usize,
    r: usize,
    l: usize,
    kind: SensingKind,
    sigma: f64,
    seed: u64,
) -> Result<SensingInstance> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} must be a finite nonnegative number")));
    }
    let op = match kind {
        SensingKind::DenseGaussian => LinearOperator::dense_gaussian(m, n, l, seed ^ OPERATOR_STREAM)?,
        SensingKind::SparseGaussian { density } => make_sparse_gaussian(m, n, l, density, seed ^ OPERATOR_STREAM)?,
    };
    let mut g = rng::seeded(seed);
    let truth = FactorPair { u: rng::gaussian_matrix(m, r, &mut g), v: rng::gaussian_matrix(n, r, &mut g) };
    let mut b = op.apply_product(&truth.u, &truth.v)?;
    if sigma > 0.0 {
        for x in &mut b {
            *x += sigma * rng::normal(&mut g);
        }
    }
    let problem = Problem::least_squares(op, b, r)?;
    Ok(SensingInstance { problem, truth, underdetermined: l < r * (m + n) })
}

/// Matrix-completion quality of a recovered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `‖P_Ω(UVᵀ) − B‖ / ‖B‖`.
    pub delta_f: f64,
    /// `Σ_Ω |(UVᵀ)_ij − B_ij| / ((max B − min B)|Ω|)`, zero for constant `B`.
    pub nmae: f64,
    /// `Σ_Ω |⌊(UVᵀ)_ij⌋ − B_ij| / |Ω|`.
    pub delta_x: f64,
}

pub fn evaluate(x: &FactorPair, omega: &IndexSet, b: &[f64]) -> Result<Metrics> {
    if omega.is_empty() || omega.len() != b.len() {
        return Err(Error::dims(format!("{} observations for {} positions", b.len(), omega.len())));
    }
    if !omega.fits(x.u.rows(), x.v.rows()) {
        return Err(Error::dims("index set does not fit the factor pair"));
    }
    let (mut sq, mut abs, mut floor_abs) = (0.0, 0.0, 0.0);
    for ((i, j), &bij) in omega.iter().zip(b) {
        let val: f64 = x.u.row(i).iter().zip(x.v.row(j)).map(|(a, b)| a * b).sum();
        sq += (val - bij) * (val - bij);
        abs += (val - bij).abs();
        floor_abs += (val.floor() - bij).abs();
    }
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let count = b.len() as f64;
    Ok(Metrics {
        delta_f: if b_norm > 0.0 { sq.sqrt() / b_norm } else { sq.sqrt() },
        nmae: if hi > lo { abs / ((hi - lo) * count) } else { 0.0 },
        delta_x: floor_abs / count,
    })
}

pub fn evaluate_instance(x: &FactorPair, inst: &McInstance) -> Result<Metrics> {
    evaluate(x, &inst.omega, &inst.b)
}
