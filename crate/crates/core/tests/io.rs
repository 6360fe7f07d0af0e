use std::path::PathBuf;

use lowrank_gn::io::{
    read_config, read_dense_csv, read_matrix_market, write_dense_csv, write_matrix_market_array,
    write_matrix_market_coordinate, MatrixMarket, RunConfig,
};
use lowrank_gn::operators::sample_index_set;
use lowrank_gn::solvers::{Rho, WStep};
use lowrank_gn::{rng, DenseMatrix, Error, IndexSet};
use rand::Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corrupt").join(name)
}

fn error_line(e: &Error) -> Option<usize> {
    match e {
        Error::Parse { line, .. } | Error::DuplicateEntry { line, .. } | Error::OutOfBounds { line, .. } => Some(*line),
        _ => None,
    }
}

#[test]
fn corrupt_corpus_is_rejected_with_line_numbers() {
    let cases = [
        ("missing_size.mtx", 2),
        ("bad_object.mtx", 1),
        ("complex_field.mtx", 1),
        ("symmetric.mtx", 1),
        ("short_size_line.mtx", 3),
        ("bad_index.mtx", 4),
        ("nan_value.mtx", 3),
        ("too_few_entries.mtx", 4),
        ("too_many_entries.mtx", 4),
        ("duplicate.mtx", 5),
        ("zero_index.mtx", 4),
        ("missing_value.mtx", 3),
        ("short_array.mtx", 5),
        ("array_two_fields.mtx", 4),
        ("ragged.csv", 2),
        ("text_cell.csv", 2),
        ("missing_equals.cfg", 3),
    ];
    let listed = std::fs::read_dir(fixture("")).unwrap().count();
    assert_eq!(listed, cases.len(), "every fixture needs an expectation");
    for (name, line) in cases {
        let path = fixture(name);
        let err = match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") => read_matrix_market(&path).unwrap_err(),
            Some("csv") => read_dense_csv(&path).unwrap_err(),
            _ => read_config(&path).unwrap_err(),
        };
        assert_eq!(error_line(&err), Some(line), "{name}: {err}");
    }
}

#[test]
fn duplicate_and_out_of_bounds_keep_their_kinds() {
    assert!(matches!(read_matrix_market(fixture("duplicate.mtx")), Err(Error::DuplicateEntry { row: 1, col: 2, .. })));
    assert!(matches!(read_matrix_market(fixture("zero_index.mtx")), Err(Error::OutOfBounds { row: 0, col: 2, .. })));
}

#[test]
fn random_sparse_instance_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.mtx");
    let mut g = rng::seeded(4);
    for seed in 0..5 {
        let omega = sample_index_set(17, 23, 0.2, seed).unwrap();
        let values: Vec<f64> = (0..omega.len()).map(|_| g.random::<f64>() * 1e3 - 5e2).collect();
        write_matrix_market_coordinate(&path, 17, 23, &omega, &values).unwrap();
        let back = read_matrix_market(&path).unwrap();
        assert_eq!(back, MatrixMarket::Coordinate { rows: 17, cols: 23, omega, values });
    }
}

#[test]
fn empty_observation_set_is_a_valid_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.mtx");
    let omega = IndexSet::new(Vec::new()).unwrap();
    write_matrix_market_coordinate(&path, 3, 4, &omega, &[]).unwrap();
    let MatrixMarket::Coordinate { rows, cols, omega, values } = read_matrix_market(&path).unwrap() else {
        panic!("expected coordinate format");
    };
    assert_eq!((rows, cols, omega.len(), values.len()), (3, 4, 0, 0));
}

#[test]
fn dense_matrices_use_array_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eye.mtx");
    write_matrix_market_array(&path, &DenseMatrix::eye(3, 3)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix array real general\n3 3\n"));
    assert_eq!(read_matrix_market(&path).unwrap(), MatrixMarket::Array(DenseMatrix::eye(3, 3)));

    let x = rng::gaussian_matrix(5, 4, &mut rng::seeded(8)).scaled(1e-7);
    write_matrix_market_array(&path, &x).unwrap();
    assert_eq!(read_matrix_market(&path).unwrap(), MatrixMarket::Array(x.clone()));
    let csv = dir.path().join("x.csv");
    write_dense_csv(&csv, &x).unwrap();
    assert_eq!(read_dense_csv(&csv).unwrap(), x);
}

#[test]
fn full_config_echoes_back() {
    let text = "\
max_iters=250
eps1=0.0000001
eps2=0.001
c1=0.25
beta=0.5
alpha0=0.75
rho=3.5
rho_adapt=false
option=gradient
gamma_u=0.01
gamma_v=0.02
linesearch_cap=40
armijo=directional
dual_step=unit
zero_residual=true
timing=false
seed=99
solver=gn-admm
generator=mc
m=40
n=50
r=3
fraction=0.3
sigma=0.01
l_ratio=0.5
input=obs.mtx
mask=mask.mtx
trace_out=trace.csv
result_out=result.txt
";
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, text).unwrap();
    let cfg = read_config(&path).unwrap();
    assert_eq!(cfg.solver.rho, Rho::Fixed(3.5));
    assert_eq!(cfg.solver.option, WStep::Gradient);
    assert_eq!(cfg.r, Some(3));
    assert_eq!(cfg.to_string(), text);
}

#[test]
fn config_errors_name_the_key() {
    for (text, key) in [("beta=1.5", "beta"), ("eps1=-1", "eps1"), ("fraction=2", "fraction"), ("colour=red", "colour")] {
        match text.parse::<RunConfig>() {
            Err(Error::Validation { key: k, .. }) => assert_eq!(k, key),
            other => panic!("{text}: {other:?}"),
        }
    }
}
