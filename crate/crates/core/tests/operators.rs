use lowrank_gn::operators::{make_sparse_gaussian, sample_index_set, OperatorKind};
use lowrank_gn::{rng, DenseMatrix, LinearOperator};
use nalgebra::DMatrix;

#[test]
fn sparse_gaussian_density_matches_request() {
    let (m, n, l, density) = (8, 8, 32, 0.05);
    let total: usize = (0..10)
        .map(|seed| match make_sparse_gaussian(m, n, l, density, seed).unwrap().kind() {
            OperatorKind::SparseGaussian { rows, .. } => rows.iter().map(Vec::len).sum::<usize>(),
            other => panic!("unexpected kind {other:?}"),
        })
        .sum();
    let expected = 10.0 * density * (l * m * n) as f64;
    let rel = (total as f64 - expected).abs() / expected;
    assert!(rel <= 0.2, "{total} nonzeros, expected about {expected}");
}

#[test]
fn sampled_entries_are_uniform() {
    let (m, n, seeds) = (50, 50, 200);
    let mut hits = vec![0u32; m * n];
    for seed in 0..seeds {
        let omega = sample_index_set(m, n, 0.3, seed).unwrap();
        assert_eq!(omega.len(), 750);
        for (i, j) in omega.iter() {
            hits[i * n + j] += 1;
        }
    }
    let rate = hits.iter().map(|&h| h as f64).sum::<f64>() / (m * n * seeds as usize) as f64;
    assert!((rate - 0.3).abs() <= 0.02);
    // every entry's inclusion frequency stays within five binomial standard deviations
    let sd = (0.3 * 0.7 / seeds as f64).sqrt();
    for &h in &hits {
        assert!((h as f64 / seeds as f64 - 0.3).abs() <= 5.0 * sd);
    }
}

#[test]
fn dense_norm_estimate_matches_spectral_norm() {
    let mut g = rng::seeded(3);
    let a = rng::gaussian_matrix(6, 9, &mut g);
    let op = LinearOperator::dense(3, 3, a.clone()).unwrap();
    let na = DMatrix::from_row_slice(6, 9, a.data());
    let oracle = (&na * na.transpose()).symmetric_eigen().eigenvalues.max().sqrt();
    assert!((op.estimate_norm().unwrap() - oracle).abs() <= 1e-6 * oracle);
}

#[test]
fn coordinate_maps_have_unit_norm() {
    assert_eq!(LinearOperator::identity(4, 5).estimate_norm().unwrap(), 1.0);
    let omega = sample_index_set(4, 5, 0.5, 1).unwrap();
    assert_eq!(LinearOperator::selection(4, 5, omega).unwrap().estimate_norm().unwrap(), 1.0);
}

#[test]
fn generators_are_deterministic_per_seed() {
    assert_eq!(make_sparse_gaussian(6, 5, 20, 0.1, 7).unwrap(), make_sparse_gaussian(6, 5, 20, 0.1, 7).unwrap());
    assert_ne!(make_sparse_gaussian(6, 5, 20, 0.1, 7).unwrap(), make_sparse_gaussian(6, 5, 20, 0.1, 8).unwrap());
    assert_eq!(LinearOperator::dense_gaussian(3, 4, 10, 2).unwrap(), LinearOperator::dense_gaussian(3, 4, 10, 2).unwrap());
    assert_eq!(sample_index_set(10, 10, 0.4, 5).unwrap(), sample_index_set(10, 10, 0.4, 5).unwrap());
}

#[test]
fn sparse_apply_matches_explicit_matrix() {
    let (m, n, l) = (5, 4, 12);
    let op = make_sparse_gaussian(m, n, l, 0.3, 11).unwrap();
    let OperatorKind::SparseGaussian { rows, .. } = op.kind() else { panic!() };
    let mut a = DMatrix::<f64>::zeros(l, m * n);
    for (i, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            a[(i, c)] = v;
        }
    }
    let x = rng::gaussian_matrix(m, n, &mut rng::seeded(12));
    let xv = nalgebra::DVector::from_vec(x.to_col_major());
    let expected = &a * &xv;
    let got = op.apply(&x).unwrap();
    for (g, e) in got.iter().zip(expected.iter()) {
        assert!((g - e).abs() <= 1e-12);
    }
    let y: Vec<f64> = (0..l).map(|i| i as f64 - 3.0).collect();
    let back = DenseMatrix::from_col_major(m, n, (a.transpose() * nalgebra::DVector::from_vec(y.clone())).as_slice());
    assert!((&op.adjoint(&y).unwrap() - &back).norm() <= 1e-12);
}
