//! Fixed instances shared by the benchmarks.

use lowrank_gn::problems::{gen_mc_integer, gen_sensing, McInstance, SensingKind};
use lowrank_gn::{rng, DenseMatrix, FactorPair, Problem};

pub const SEED: u64 = 2024;

/// Random full-rank factors and a residual-sized matrix `Z`.
pub fn direction_inputs(m: usize, n: usize, r: usize) -> (FactorPair, DenseMatrix) {
    let mut g = rng::seeded(SEED);
    let u = rng::gaussian_matrix(m, r, &mut g);
    let v = rng::gaussian_matrix(n, r, &mut g);
    let z = rng::gaussian_matrix(m, n, &mut g);
    (FactorPair::new(u, v).expect("shapes agree"), z)
}

pub fn dense_gaussian(m: usize, n: usize) -> DenseMatrix {
    rng::gaussian_matrix(m, n, &mut rng::seeded(SEED))
}

/// Integer completion instance with `fraction` of the entries observed.
pub fn completion(m: usize, n: usize, r: usize, fraction: f64) -> McInstance {
    gen_mc_integer(m, n, r, fraction, 0.0, SEED).expect("valid generator parameters")
}

/// Underdetermined dense Gaussian sensing with `l = r(m + n) / 2`.
pub fn sensing(m: usize, n: usize, r: usize) -> Problem {
    gen_sensing(m, n, r, r * (m + n) / 2, SensingKind::DenseGaussian, 0.0, SEED)
        .expect("valid generator parameters")
        .problem
}
