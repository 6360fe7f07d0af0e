use lowrank_gn::linalg::{rayleigh_ritz, truncated_svd};
use lowrank_gn::objectives::{least_squares, soft_threshold};
use lowrank_gn::problems::{evaluate_instance, gen_mc_integer, gen_sensing, gen_sparse_spikes, gen_symmetric, SensingKind, SymmetricKind};
use lowrank_gn::rng;
use lowrank_gn::solvers::{
    factorization_start, init_point, least_norm_preimage, solve_fsgn, solve_factorization, solve_gn_admm, solve_l1,
    solve_lsgn, solve_rad_admm, solve_slsgn, symmetric_grad, SolverConfig, StopRule, WStep,
};
use lowrank_gn::{DenseMatrix, FactorPair, LinearOperator, Problem, Status};
use nalgebra::DMatrix;

fn na(x: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(x.rows(), x.cols(), x.data())
}

fn quiet() -> SolverConfig {
    SolverConfig { timing: false, ..Default::default() }
}

fn random_pair(m: usize, n: usize, r: usize, seed: u64) -> FactorPair {
    let mut g = rng::seeded(seed);
    FactorPair::new(rng::gaussian_matrix(m, r, &mut g), rng::gaussian_matrix(n, r, &mut g)).unwrap()
}

fn identity_problem(b: &DenseMatrix, r: usize) -> Problem {
    let op = LinearOperator::identity(b.rows(), b.cols());
    Problem::least_squares(op.clone(), op.apply(b).unwrap(), r).unwrap()
}

#[test]
fn lsgn_recovers_noiseless_identity_data() {
    let b = random_pair(16, 16, 2, 1).product();
    let prob = identity_problem(&b, 2);
    let cfg = SolverConfig { max_iters: 100, ..quiet() };
    let (x, trace) = solve_lsgn(&prob, &init_point(&prob).unwrap(), &cfg).unwrap();
    assert!(trace.iterations() <= 100);
    assert!(0.5 * (&x.product() - &b).norm_sq() / b.norm_sq() <= 1e-12);
}

#[test]
fn lsgn_recovers_overdetermined_sensing() {
    let (m, n, r) = (12, 10, 2);
    let inst = gen_sensing(m, n, r, 3 * r * (m + n), SensingKind::DenseGaussian, 0.0, 2).unwrap();
    assert!(!inst.underdetermined);
    let cfg = SolverConfig { max_iters: 200, eps1: 1e-10, ..quiet() };
    let (x, _) = solve_lsgn(&inst.problem, &init_point(&inst.problem).unwrap(), &cfg).unwrap();
    let truth = inst.truth.product();
    assert!((&x.product() - &truth).norm() <= 1e-8 * truth.norm());
}

#[test]
fn lsgn_objective_never_increases_on_noisy_completion() {
    let inst = gen_mc_integer(40, 50, 3, 0.4, 0.05, 3).unwrap();
    let prob = inst.problem().unwrap();
    let (_, trace) = solve_lsgn(&prob, &init_point(&prob).unwrap(), &quiet()).unwrap();
    let obj = trace.objectives();
    assert!(obj.windows(2).all(|w| w[1] <= w[0]));
    assert!(trace.records.windows(2).all(|w| w[1].k == w[0].k + 1));
}

#[test]
fn factorization_recursion_reaches_exact_rank_data() {
    let b = random_pair(30, 20, 3, 4).product();
    let cfg = SolverConfig { max_iters: 50, eps1: 1e-12, ..quiet() };
    let (x, _) = solve_factorization(&b, &random_pair(30, 20, 3, 5), &cfg).unwrap();
    assert!((&x.product() - &b).norm() <= 1e-8 * b.norm());
}

#[test]
fn rayleigh_ritz_after_full_steps_matches_truncated_svd() {
    let mut g = rng::seeded(6);
    let b = &random_pair(40, 30, 5, 7).product() + &rng::gaussian_matrix(40, 30, &mut g).scaled(0.1);
    let cfg = SolverConfig { max_iters: 200, eps1: 1e-12, ..quiet() };
    let (x, _) = solve_factorization(&b, &factorization_start(40, 30, 5), &cfg).unwrap();
    let rr = rayleigh_ritz(&x.u, &x.v, &b).unwrap();
    let reference = truncated_svd(&b, 5).unwrap();
    for (a, b) in rr.sigma.iter().zip(&reference.sigma) {
        assert!((a - b).abs() <= 1e-6 * b, "{a} vs {b}");
    }
}

#[test]
fn fsgn_rate_is_linear_on_underdetermined_sensing() {
    let (m, n, r) = (32, 32, 4);
    let inst = gen_sensing(m, n, r, r * (m + n) / 2, SensingKind::DenseGaussian, 0.0, 8).unwrap();
    assert!(inst.underdetermined);
    let cfg = SolverConfig { max_iters: 300, eps1: 1e-14, ..quiet() };
    let (_, trace) = solve_fsgn(&inst.problem, &random_pair(m, n, r, 9), &cfg).unwrap();
    let res: Vec<f64> = trace.objectives().iter().map(|v| v.sqrt()).collect();
    let ratios: Vec<f64> = res[res.len() - 11..].windows(2).map(|w| w[1] / w[0]).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &q| (lo.min(q), hi.max(q)));
    assert!(hi < 1.0, "{ratios:?}");
    assert!(hi - lo < 0.01, "{ratios:?}");
}

#[test]
fn fsgn_start_at_solution_is_a_fixed_point() {
    let x0 = random_pair(8, 7, 2, 10);
    let op = LinearOperator::dense_gaussian(8, 7, 40, 11).unwrap();
    let b = op.apply_product(&x0.u, &x0.v).unwrap();
    let prob = Problem::least_squares(op, b, 2).unwrap();
    let (x, trace) = solve_fsgn(&prob, &x0, &quiet()).unwrap();
    assert_eq!(trace.status, Status::Converged(StopRule::Cond1));
    assert_eq!(trace.iterations(), 0);
    assert_eq!(x, x0);
}

#[test]
fn least_squares_w_step_scalar() {
    // argmin ½w² + (3/2)(w − 4)² = 3
    assert_eq!(least_squares().prox(&[4.0], 3.0).unwrap(), vec![3.0]);
}

#[test]
fn gn_admm_tracks_lsgn_on_noisy_completion() {
    let inst = gen_mc_integer(200, 400, 5, 0.3, 0.01, 12).unwrap();
    let prob = inst.problem().unwrap();
    let x0 = init_point(&prob).unwrap();
    let cfg = SolverConfig { max_iters: 1000, ..quiet() };
    let (ls, _) = solve_lsgn(&prob, &x0, &cfg).unwrap();
    let (admm, trace) = solve_gn_admm(&prob, &x0, &cfg).unwrap();
    assert!(trace.status.is_converged(), "{}", trace.status);
    let df_ls = evaluate_instance(&ls, &inst).unwrap().delta_f;
    let df_admm = evaluate_instance(&admm.x, &inst).unwrap().delta_f;
    assert!(df_admm <= 2.0 * df_ls, "GN-ADMM {df_admm:.3e} vs Ls-GN {df_ls:.3e} ({})", trace.status);
}

#[test]
fn gn_admm_options_reach_feasibility() {
    for option in [WStep::Prox, WStep::Gradient] {
        let inst = gen_mc_integer(30, 40, 2, 0.5, 0.0, 13).unwrap();
        let prob = inst.problem().unwrap();
        let cfg = SolverConfig { max_iters: 2000, option, ..quiet() };
        let (_, trace) = solve_gn_admm(&prob, &init_point(&prob).unwrap(), &cfg).unwrap();
        let feas = trace.last().feasibility.unwrap();
        assert!(feas <= 1e-4 * prob.b_norm().max(1.0), "{option}: {feas:e}");
    }
}

#[test]
fn rad_admm_surrogate_decreases_every_iteration() {
    let inst = gen_mc_integer(25, 30, 2, 0.5, 0.1, 14).unwrap();
    let prob = inst.problem().unwrap();
    let cfg = SolverConfig { max_iters: 100, ..quiet() };
    let (_, trace) = solve_rad_admm(&prob, &init_point(&prob).unwrap(), &cfg).unwrap();
    let l_a = prob.l_a();
    let mut steps = 0;
    for a in trace.records.iter().filter_map(|r| r.admm.as_ref()) {
        let bound = a.surrogate_before
            - 0.5 * l_a * cfg.gamma_u * a.u_step.powi(2)
            - 0.5 * l_a * cfg.gamma_v * a.v_step.powi(2);
        assert!(a.surrogate_after <= bound + 1e-10 * a.surrogate_before.abs().max(1.0));
        steps += 1;
    }
    assert!(steps > 0);
}

#[test]
fn rad_admm_huge_ridge_freezes_factors() {
    let inst = gen_mc_integer(20, 20, 2, 0.5, 0.0, 15).unwrap();
    let prob = inst.problem().unwrap();
    let x0 = random_pair(20, 20, 2, 16);
    let cfg = SolverConfig { max_iters: 1, gamma_u: 1e12, gamma_v: 1e12, ..quiet() };
    let (state, _) = solve_rad_admm(&prob, &x0, &cfg).unwrap();
    assert!((&state.x.u - &x0.u).norm() <= 1e-6);
    assert!((&state.x.v - &x0.v).norm() <= 1e-6);
}

#[test]
fn slsgn_recovers_psd_data() {
    let b = gen_symmetric(32, 2, SymmetricKind::Psd, 17).unwrap();
    let prob = identity_problem(&b, 2);
    let u0 = rng::gaussian_matrix(32, 2, &mut rng::seeded(18));
    let cfg = SolverConfig { max_iters: 100, eps1: 1e-9, ..quiet() };
    let (u, trace) = solve_slsgn(&prob, &u0, &cfg).unwrap();
    assert!(trace.iterations() <= 100);
    assert!((&u.matmul_t(&u) - &b).norm() <= 1e-6 * b.norm());
    assert!(trace.objectives().windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn slsgn_reaches_a_stationary_point_of_indefinite_data() {
    let b = gen_symmetric(24, 3, SymmetricKind::Indefinite, 19).unwrap();
    let prob = identity_problem(&b, 3);
    let u0 = rng::gaussian_matrix(24, 3, &mut rng::seeded(20));
    let (u, trace) = solve_slsgn(&prob, &u0, &SolverConfig { eps1: 1e-7, ..quiet() }).unwrap();
    assert!(trace.status.is_converged(), "{}", trace.status);
    let grad = symmetric_grad(&prob.phi_prime(&u, &u).unwrap(), &u);
    assert!(grad.norm() <= 1e-6, "{:e}", grad.norm());
    assert!(trace.last().grad_norm <= 1e-6);
    // The best PSD rank-3 fit keeps the positive spectrum 3, 2, 1 and misses the negative part.
    let eig = na(&u.matmul_t(&u)).symmetric_eigen();
    let mut top: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    top.sort_by(|a, b| b.total_cmp(a));
    for (got, want) in top.iter().zip([3.0, 2.0, 1.0]) {
        assert!((got - want).abs() <= 1e-6, "{top:?}");
    }
}

#[test]
fn l1_scheme_removes_sparse_spikes() {
    let (b, low) = gen_sparse_spikes(48, 40, 2, 0.03, 5.0, 21).unwrap();
    let prob = identity_problem(&b, 2);
    let x0 = FactorPair::new(DenseMatrix::eye(48, 2), DenseMatrix::eye(40, 2)).unwrap();
    let (x, trace) = solve_l1(&prob, &x0, &SolverConfig { max_iters: 200, ..quiet() }).unwrap();
    assert!(trace.status.is_converged(), "{}", trace.status);
    assert!((&x.product() - &low).norm() <= 1e-4 * low.norm());
    assert_eq!(soft_threshold(1.2, 0.5), 0.7);
}

#[test]
fn init_point_splits_the_spectrum_evenly() {
    let inst = gen_mc_integer(20, 15, 3, 0.7, 0.0, 22).unwrap();
    let prob = inst.problem().unwrap();
    let x0 = init_point(&prob).unwrap();
    let m = least_norm_preimage(prob.op(), prob.b()).unwrap();

    let a = na(&m);
    let eig = (a.transpose() * &a).symmetric_eigen();
    let mut order: Vec<usize> = (0..15).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let v = DMatrix::from_fn(15, 3, |i, k| eig.eigenvectors[(i, order[k])]);
    let oracle = &a * &v * v.transpose();
    assert!((na(&x0.product()) - &oracle).norm() <= 1e-8 * oracle.norm());

    let sv = |f: &DenseMatrix| {
        let mut s: Vec<f64> = (na(f).transpose() * na(f)).symmetric_eigen().eigenvalues.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    let (su, sv_) = (sv(&x0.u), sv(&x0.v));
    for k in 0..3 {
        let sigma = eig.eigenvalues[order[k]].sqrt();
        assert!((su[k] - sigma).abs() <= 1e-8 * sigma);
        assert!((sv_[k] - sigma).abs() <= 1e-8 * sigma);
    }
}

#[test]
fn l1_objective_halves_and_settles() {
    let (b, _) = gen_sparse_spikes(64, 64, 2, 0.02, 5.0, 23).unwrap();
    let prob = identity_problem(&b, 2);
    let x0 = FactorPair::new(DenseMatrix::eye(64, 2), DenseMatrix::eye(64, 2)).unwrap();
    let cfg = SolverConfig { max_iters: 100, eps1: 1e-300, eps2: 1e-300, ..quiet() };
    let (_, trace) = solve_l1(&prob, &x0, &cfg).unwrap();
    let obj = trace.objectives();
    assert_eq!(obj.len(), 101);
    assert!(obj[100] <= 0.5 * obj[1], "{} vs {}", obj[100], obj[1]);
    assert!(obj[50..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{:?}", &obj[50..]);
}
