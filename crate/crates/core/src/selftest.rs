//! Runtime invariant suite behind the `selftest` command.
//!
//! Each check builds a small seeded instance, runs the relevant kernel or
//! solver and compares against a property that must hold exactly or to a
//! stated tolerance.

use std::fmt;
use std::path::PathBuf;

use crate::direction::{gn_direction, normal_equation_residuals, subproblem_value, FactorPair};
use crate::error::Result;
use crate::io::{self, MatrixMarket, RunConfig};
use crate::linalg::{dot, jacobi_svd, pseudo_inverse, qr_economy, truncated_svd, DenseMatrix};
use crate::objectives::{prox_l1, Problem};
use crate::operators::{make_sparse_gaussian, sample_index_set, LinearOperator};
use crate::problems::{gen_lowrank_clustered, gen_mc_integer, gen_sensing, SensingKind};
use crate::rng;
use crate::solvers::{
    eta_constants, init_point, solve_gn_admm, solve_lsgn, solve_rad_admm, solve_slsgn, symmetric_grad, SolverConfig,
    WStep,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{tag} {:<28} {}", self.name, self.detail)
    }
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

/// Runs every check; never panics.
pub fn run_all() -> Vec<Check> {
    vec![
        check("linalg.qr_svd", qr_and_svd()),
        check("linalg.pseudo_inverse", pinv_identities()),
        check("operators.adjoint", adjoints()),
        check("objectives.gradient", gradients()),
        check("objectives.prox_l1", prox_nonexpansive()),
        check("direction.normal_equations", normal_equations()),
        check("solvers.lsgn_armijo", lsgn_armijo()),
        check("solvers.slsgn_descent", slsgn_descent()),
        check("solvers.admm_lyapunov", admm_lyapunov()),
        check("solvers.rad_surrogate", rad_surrogate()),
        check("problems.determinism", determinism()),
        check("io.round_trip", io_round_trip()),
    ]
}

fn qr_and_svd() -> Result<(bool, String)> {
    let x = rng::gaussian_matrix(9, 4, &mut rng::seeded(1));
    let (q, r) = qr_economy(&x)?;
    let recon = (&q.matmul(&r) - &x).norm() / x.norm();
    let ortho = (&q.t_matmul(&q) - &DenseMatrix::identity(4)).norm();
    let svd = jacobi_svd(&x)?;
    let svd_err = (&svd.reconstruct() - &x).norm() / x.norm();
    let worst = recon.max(ortho).max(svd_err);
    Ok((worst <= 1e-12, format!("max error {worst:.2e}")))
}

fn pinv_identities() -> Result<(bool, String)> {
    let x = rng::gaussian_matrix(8, 3, &mut rng::seeded(2));
    let p = pseudo_inverse(&x)?;
    let err = (&x.matmul(&p).matmul(&x) - &x).norm() / x.norm();
    Ok((err <= 1e-12, format!("‖XX†X − X‖/‖X‖ = {err:.2e}")))
}

fn adjoints() -> Result<(bool, String)> {
    let (m, n) = (5, 4);
    let ops = [
        LinearOperator::identity(m, n),
        LinearOperator::selection(m, n, sample_index_set(m, n, 0.5, 3)?)?,
        LinearOperator::dense_gaussian(m, n, 11, 4)?,
        make_sparse_gaussian(m, n, 9, 0.3, 5)?,
    ];
    let mut g = rng::seeded(6);
    let mut worst: f64 = 0.0;
    for op in &ops {
        let x = rng::gaussian_matrix(m, n, &mut g);
        let y = rng::normal_vec(op.out_len(), &mut g);
        let lhs = dot(&op.apply(&x)?, &y);
        let rhs = x.dot(&op.adjoint(&y)?);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    Ok((worst <= 1e-10, format!("max inner-product gap {worst:.2e}")))
}

fn gradients() -> Result<(bool, String)> {
    let inst = gen_sensing(4, 3, 2, 10, SensingKind::DenseGaussian, 0.1, 7)?;
    let prob = &inst.problem;
    let mut g = rng::seeded(8);
    let x = FactorPair::new(rng::gaussian_matrix(4, 2, &mut g), rng::gaussian_matrix(3, 2, &mut g))?;
    let (gu, gv) = prob.grad_blocks(&x.u, &x.v)?;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (grad, is_u) in [(&gu, true), (&gv, false)] {
        for i in 0..grad.rows() {
            for j in 0..grad.cols() {
                let bump = |s: f64| {
                    let mut y = x.clone();
                    if is_u { y.u[(i, j)] += s } else { y.v[(i, j)] += s }
                    prob.value(&y.u, &y.v)
                };
                let fd = (bump(h)? - bump(-h)?) / (2.0 * h);
                worst = worst.max((fd - grad[(i, j)]).abs() / grad[(i, j)].abs().max(1.0));
            }
        }
    }
    Ok((worst <= 1e-6, format!("max relative FD gap {worst:.2e}")))
}

fn prox_nonexpansive() -> Result<(bool, String)> {
    let mut g = rng::seeded(9);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let a = rng::gaussian_matrix(4, 4, &mut g);
        let b = rng::gaussian_matrix(4, 4, &mut g);
        let gap = (&prox_l1(&a, 0.3) - &prox_l1(&b, 0.3)).norm() - (&a - &b).norm();
        worst = worst.max(gap);
    }
    Ok((worst <= 1e-12, format!("max expansion {worst:.2e}")))
}

fn normal_equations() -> Result<(bool, String)> {
    let mut g = rng::seeded(10);
    let x = FactorPair::new(rng::gaussian_matrix(7, 3, &mut g), rng::gaussian_matrix(6, 3, &mut g))?;
    let z = rng::gaussian_matrix(7, 6, &mut g);
    let dir = gn_direction(&x, &z)?;
    let (a, b) = normal_equation_residuals(&x, &z, &dir);
    let scale = x.u.norm().max(x.v.norm()) * z.norm();
    let res = a.norm().max(b.norm()) / scale;
    let direct = 0.5 * (&dir.tangent(&x) - &z).norm_sq();
    let gap = (subproblem_value(&x, &z)? - direct).abs() / direct.max(1.0);
    Ok((res <= 1e-9 && gap <= 1e-9, format!("residual {res:.2e}, value gap {gap:.2e}")))
}

fn lsgn_armijo() -> Result<(bool, String)> {
    let inst = gen_mc_integer(20, 25, 2, 0.6, 0.0, 11)?;
    let prob = inst.problem()?;
    let cfg = SolverConfig { max_iters: 60, timing: false, ..Default::default() };
    let (_, trace) = solve_lsgn(&prob, &init_point(&prob)?, &cfg)?;
    let mut violations = 0;
    for w in trace.records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let bound = a.objective - 0.5 * cfg.c1 * a.alpha * a.descent.unwrap_or(0.0);
        if b.objective > a.objective || b.objective > bound {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{} steps, {violations} violations, {}", trace.records.len() - 1, trace.status)))
}

fn slsgn_descent() -> Result<(bool, String)> {
    let mut g = rng::seeded(12);
    let truth = rng::gaussian_matrix(10, 2, &mut g);
    let op = LinearOperator::identity(10, 10);
    let prob = Problem::least_squares(op.clone(), op.apply(&truth.matmul_t(&truth))?, 2)?;
    let u0 = rng::gaussian_matrix(10, 2, &mut g);
    let cfg = SolverConfig { max_iters: 100, timing: false, ..Default::default() };
    let (u, trace) = solve_slsgn(&prob, &u0, &cfg)?;
    let mono = trace.objectives().windows(2).all(|w| w[1] <= w[0]);
    let grad = symmetric_grad(&prob.phi_prime(&u, &u)?, &u).norm();
    Ok((mono && trace.status.is_converged(), format!("final ‖∇Φ‖ {grad:.2e}, {}", trace.status)))
}

fn admm_lyapunov() -> Result<(bool, String)> {
    let inst = gen_mc_integer(15, 18, 2, 0.6, 0.0, 13)?;
    let prob = inst.problem()?;
    let x0 = init_point(&prob)?;
    let mut worst = f64::NEG_INFINITY;
    for option in [WStep::Prox, WStep::Gradient] {
        let cfg = SolverConfig { max_iters: 150, option, timing: false, ..Default::default() };
        let (state, trace) = solve_gn_admm(&prob, &x0, &cfg)?;
        let phi = prob.phi();
        let (eta1, eta0) = eta_constants(option, state.rho, phi.l_phi(), phi.mu_phi());
        let recs = &trace.records;
        for k in 1..recs.len().saturating_sub(1) {
            let (now, next) = (&recs[k], &recs[k + 1]);
            let (Some(l0), Some(l1), Some(admm)) = (now.lagrangian, next.lagrangian, now.admm.as_ref()) else {
                continue;
            };
            let q = match option {
                WStep::Prox => {
                    l1 - l0 + 0.5 * eta1 * admm.w_step.powi(2)
                        + 0.5 * cfg.c1 * state.rho * now.alpha * now.descent.unwrap_or(0.0)
                }
                WStep::Gradient => {
                    let prev = recs[k - 1].admm.as_ref().map_or(0.0, |a| a.w_step);
                    l1 + 0.5 * eta0 * admm.w_step.powi(2) - l0 - 0.5 * eta0 * prev.powi(2)
                }
            };
            worst = worst.max(q / l0.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok((worst <= 1e-8, format!("max relative increase {worst:.2e}")))
}

fn rad_surrogate() -> Result<(bool, String)> {
    let inst = gen_mc_integer(15, 18, 2, 0.6, 0.5, 14)?;
    let prob = inst.problem()?;
    let cfg = SolverConfig { max_iters: 50, timing: false, ..Default::default() };
    let (_, trace) = solve_rad_admm(&prob, &init_point(&prob)?, &cfg)?;
    let l_a = prob.l_a();
    let mut worst = f64::NEG_INFINITY;
    for a in trace.records.iter().filter_map(|r| r.admm.as_ref()) {
        let bound = a.surrogate_before
            - 0.5 * l_a * cfg.gamma_u * a.u_step.powi(2)
            - 0.5 * l_a * cfg.gamma_v * a.v_step.powi(2);
        worst = worst.max((a.surrogate_after - bound) / a.surrogate_before.max(1.0));
    }
    Ok((worst <= 1e-10, format!("max bound excess {worst:.2e}")))
}

fn determinism() -> Result<(bool, String)> {
    let same_mc = gen_mc_integer(12, 9, 2, 0.4, 0.1, 15)? == gen_mc_integer(12, 9, 2, 0.4, 0.1, 15)?;
    let same_cl = gen_lowrank_clustered(10, 8, 2, 16)?.0 == gen_lowrank_clustered(10, 8, 2, 16)?.0;
    let a = gen_sensing(5, 5, 1, 12, SensingKind::SparseGaussian { density: 0.2 }, 0.0, 17)?;
    let b = gen_sensing(5, 5, 1, 12, SensingKind::SparseGaussian { density: 0.2 }, 0.0, 17)?;
    let same_op = a.problem.op() == b.problem.op() && a.problem.b() == b.problem.b();
    let svd_a = truncated_svd(&gen_lowrank_clustered(10, 8, 2, 16)?.0, 2)?;
    let svd_b = truncated_svd(&gen_lowrank_clustered(10, 8, 2, 16)?.0, 2)?;
    let ok = same_mc && same_cl && same_op && svd_a == svd_b;
    Ok((ok, format!("mc {same_mc}, clustered {same_cl}, sensing {same_op}")))
}

struct ScratchDir(PathBuf);

impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn io_round_trip() -> Result<(bool, String)> {
    let dir = ScratchDir(std::env::temp_dir().join(format!("lowrank-selftest-{}", std::process::id())));
    std::fs::create_dir_all(&dir.0)?;
    let inst = gen_mc_integer(7, 6, 2, 0.5, 0.3, 18)?;
    let mm = dir.0.join("obs.mtx");
    io::write_matrix_market_coordinate(&mm, 7, 6, &inst.omega, &inst.b)?;
    let coord_ok = matches!(io::read_matrix_market(&mm)?,
        MatrixMarket::Coordinate { rows: 7, cols: 6, omega, values } if omega == inst.omega && values == inst.b);
    let dense = rng::gaussian_matrix(4, 3, &mut rng::seeded(19));
    let arr = dir.0.join("x.mtx");
    io::write_matrix_market_array(&arr, &dense)?;
    let array_ok = io::read_matrix_market(&arr)? == MatrixMarket::Array(dense.clone());
    let csv = dir.0.join("x.csv");
    io::write_dense_csv(&csv, &dense)?;
    let csv_ok = io::read_dense_csv(&csv)? == dense;
    let cfg = RunConfig { m: Some(3), sigma: Some(0.25), ..Default::default() };
    let cfg_ok = cfg.to_string().parse::<RunConfig>()? == cfg;
    let ok = coord_ok && array_ok && csv_ok && cfg_ok;
    Ok((ok, format!("coordinate {coord_ok}, array {array_ok}, csv {csv_ok}, config {cfg_ok}")))
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_check_passes() {
        for c in super::run_all() {
            assert!(c.passed, "{c}");
        }
    }
}
