//! The one random number generator used across the crate.
//!
//! Every seeded routine draws from [`ChaCha8Rng`] so that generators, sampled
//! index sets and sensing operators are reproducible bit-for-bit on every
//! platform. Normal variates come from `rand_distr::StandardNormal`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::DenseMatrix;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(len: usize, rng: &mut Rng) -> Vec<f64> {
    (0..len).map(|_| normal(rng)).collect()
}

/// Matrix with i.i.d. standard normal entries, filled in row-major order.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_vec(rows, cols, normal_vec(rows * cols, rng))
}
