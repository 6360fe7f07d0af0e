//! Convex losses `φ` and the composite objective `Φ(U, V) = φ(A(UVᵀ) − B)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::operators::LinearOperator;

/// A convex, `L_φ`-smooth, `μ_φ`-strongly convex loss on `R^l`.
pub trait SmoothObjective: Send + Sync {
    fn value(&self, r: &[f64]) -> f64;
    fn gradient(&self, r: &[f64]) -> Vec<f64>;
    fn l_phi(&self) -> f64;
    fn mu_phi(&self) -> f64;

    /// `argmin_w φ(w) + (ρ/2)‖w − q‖²` when a closed form is available.
    fn prox(&self, _q: &[f64], _rho: f64) -> Option<Vec<f64>> {
        None
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// `φ(r) = ½‖r‖²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastSquares;

pub fn least_squares() -> Arc<dyn SmoothObjective> {
    Arc::new(LeastSquares)
}

impl SmoothObjective for LeastSquares {
    fn value(&self, r: &[f64]) -> f64 {
        0.5 * r.iter().map(|x| x * x).sum::<f64>()
    }

    fn gradient(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }

    fn l_phi(&self) -> f64 {
        1.0
    }

    fn mu_phi(&self) -> f64 {
        1.0
    }

    fn prox(&self, q: &[f64], rho: f64) -> Option<Vec<f64>> {
        let s = rho / (1.0 + rho);
        Some(q.iter().map(|x| s * x).collect())
    }

    fn name(&self) -> &str {
        "least_squares"
    }
}

/// Entrywise soft thresholding: `sign(q)·max(|q| − t, 0)`.
pub fn prox_l1(q: &DenseMatrix, t: f64) -> DenseMatrix {
    q.map(|x| soft_threshold(x, t))
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `Φ(U, V) = φ(A(UVᵀ) − B)` together with the fixed rank `r` and the cached
/// constants `L_A = ‖A‖²` and `L = L_φ · L_A`.
#[derive(Clone)]
pub struct Problem {
    op: LinearOperator,
    b: Vec<f64>,
    phi: Arc<dyn SmoothObjective>,
    rank: usize,
    l_a: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("m", &self.m())
            .field("n", &self.n())
            .field("l", &self.b.len())
            .field("rank", &self.rank)
            .field("phi", &self.phi.name())
            .field("l_a", &self.l_a)
            .finish()
    }
}

/// Residual, loss value and `Φ′ = A*∇φ(residual)` at one iterate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: Vec<f64>,
    pub value: f64,
    pub phi_prime: DenseMatrix,
}

impl Problem {
    pub fn new(op: LinearOperator, b: Vec<f64>, phi: Arc<dyn SmoothObjective>, rank: usize) -> Result<Self> {
        if b.len() != op.out_len() {
            return Err(Error::dims(format!(
                "observation vector has length {}, operator outputs {}",
                b.len(),
                op.out_len()
            )));
        }
        let (m, n) = (op.in_rows(), op.in_cols());
        if rank == 0 || rank > m.min(n) {
            return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={}", m.min(n))));
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("observation {i}")));
        }
        let norm = match op.estimate_norm() {
            Err(Error::ConvergenceFailure { .. }) => op.lanczos_norm()?,
            other => other?,
        };
        Ok(Self { op, b, phi, rank, l_a: norm * norm })
    }

    pub fn least_squares(op: LinearOperator, b: Vec<f64>, rank: usize) -> Result<Self> {
        Self::new(op, b, least_squares(), rank)
    }

    /// Same operator and loss with different observations.
    pub fn with_observations(&self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.b.len() {
            return Err(Error::dims("observation length changed"));
        }
        Ok(Self { b, ..self.clone() })
    }

    pub fn op(&self) -> &LinearOperator {
        &self.op
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn b_norm(&self) -> f64 {
        crate::linalg::norm2(&self.b)
    }

    pub fn phi(&self) -> &dyn SmoothObjective {
        self.phi.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn m(&self) -> usize {
        self.op.in_rows()
    }

    pub fn n(&self) -> usize {
        self.op.in_cols()
    }

    /// `L_A = ‖A‖²`.
    pub fn l_a(&self) -> f64 {
        self.l_a
    }

    /// `L = L_φ · ‖A‖²`.
    pub fn lipschitz(&self) -> f64 {
        self.phi.l_phi() * self.l_a
    }

    /// `A(UVᵀ) − B`.
    pub fn residual(&self, u: &DenseMatrix, v: &DenseMatrix) -> Result<Vec<f64>> {
        let mut r = self.op.apply_product(u, v)?;
        for (x, b) in r.iter_mut().zip(&self.b) {
            *x -= b;
        }
        Ok(r)
    }

    pub fn value(&self, u: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
        Ok(self.phi.value(&self.residual(u, v)?))
    }

    pub fn evaluate(&self, u: &DenseMatrix, v: &DenseMatrix) -> Result<Evaluation> {
        let residual = self.residual(u, v)?;
        let value = self.phi.value(&residual);
        let phi_prime = self.op.adjoint(&self.phi.gradient(&residual))?;
        Ok(Evaluation { residual, value, phi_prime })
    }

    /// `Φ′(UVᵀ) = A*∇φ(A(UVᵀ) − B)`.
    pub fn phi_prime(&self, u: &DenseMatrix, v: &DenseMatrix) -> Result<DenseMatrix> {
        let residual = self.residual(u, v)?;
        self.op.adjoint(&self.phi.gradient(&residual))
    }

    /// `(Φ′V, Φ′ᵀU)`, the two blocks of `∇Φ(U, V)`.
    pub fn grad_blocks(&self, u: &DenseMatrix, v: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
        let pp = self.phi_prime(u, v)?;
        Ok(grad_blocks_from(&pp, u, v))
    }
}

pub(crate) fn grad_blocks_from(phi_prime: &DenseMatrix, u: &DenseMatrix, v: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    (phi_prime.matmul(v), phi_prime.t_matmul(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{sample_index_set, LinearOperator};
    use crate::rng;

    #[test]
    fn least_squares_values() {
        let ls = LeastSquares;
        assert_eq!(ls.value(&[3.0, 4.0]), 12.5);
        assert_eq!(ls.gradient(&[3.0, 4.0]), vec![3.0, 4.0]);
        assert_eq!((ls.l_phi(), ls.mu_phi()), (1.0, 1.0));
    }

    #[test]
    fn least_squares_prox_scalar() {
        // argmin ½w² + (3/2)(w − 4)² = 3
        assert_eq!(LeastSquares.prox(&[4.0], 3.0).unwrap(), vec![3.0]);
    }

    #[test]
    fn soft_threshold_cases() {
        assert!((soft_threshold(1.2, 0.5) - 0.7).abs() < 1e-15);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert!((soft_threshold(-2.0, 0.5) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn phi_prime_identity_cases() {
        let b = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let op = LinearOperator::identity(2, 2);
        let prob = Problem::least_squares(op.clone(), op.apply(&b).unwrap(), 2).unwrap();
        let u = b.clone();
        let v = DenseMatrix::identity(2);
        assert_eq!(prob.phi_prime(&u, &v).unwrap().norm(), 0.0);

        let prob = Problem::least_squares(op, vec![0.0; 4], 1).unwrap();
        let e1 = DenseMatrix::from_rows(&[&[1.0], &[0.0]]);
        let pp = prob.phi_prime(&e1, &e1).unwrap();
        assert_eq!(pp, DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]));
        let (gu, gv) = prob.grad_blocks(&e1, &e1).unwrap();
        assert_eq!((gu, gv), (e1.clone(), e1));
    }

    #[test]
    fn problem_validation() {
        let op = LinearOperator::identity(2, 3);
        assert!(Problem::least_squares(op.clone(), vec![0.0; 5], 1).is_err());
        assert!(Problem::least_squares(op.clone(), vec![0.0; 6], 3).is_err());
        assert!(Problem::least_squares(op, vec![0.0; 6], 2).is_ok());
    }

    #[test]
    fn selection_products_use_observed_entries() {
        let mut r = rng::seeded(3);
        let u = rng::gaussian_matrix(6, 2, &mut r);
        let v = rng::gaussian_matrix(5, 2, &mut r);
        let omega = sample_index_set(6, 5, 0.5, 2).unwrap();
        let op = LinearOperator::selection(6, 5, omega).unwrap();
        let b = rng::normal_vec(op.out_len(), &mut r);
        let prob = Problem::least_squares(op.clone(), b.clone(), 2).unwrap();
        let direct: f64 = op
            .apply(&u.matmul_t(&v))
            .unwrap()
            .iter()
            .zip(&b)
            .map(|(x, y)| 0.5 * (x - y) * (x - y))
            .sum();
        assert!((prob.value(&u, &v).unwrap() - direct).abs() < 1e-12);
    }
}
