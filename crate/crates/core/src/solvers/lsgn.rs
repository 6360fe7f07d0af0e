use super::linesearch::linesearch;
use super::trace::TraceBuilder;
use super::{check_stop, ArmijoMeasure, IterationRecord, IterationTrace, SolverConfig, Status, StopState};
use crate::direction::{gn_direction, Direction, FactorPair};
use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::objectives::{grad_blocks_from, Problem};

/// Linesearch Gauss–Newton: `Z_k = −Φ′(U_kV_kᵀ)/L`, GN direction, Armijo
/// backtracking, update.
///
/// Numerical breakdowns (rank loss, exhausted linesearch) end the run with
/// the corresponding [`Status`]; `Err` is reserved for invalid input.
pub fn solve_lsgn(prob: &Problem, x0: &FactorPair, cfg: &SolverConfig) -> Result<(FactorPair, IterationTrace)> {
    gn_loop(prob, x0, cfg, false)
}

pub(crate) fn check_start(prob: &Problem, x0: &FactorPair) -> Result<()> {
    if x0.u.rows() != prob.m() || x0.v.rows() != prob.n() || x0.rank() != prob.rank() {
        return Err(Error::dims(format!(
            "start point {:?}/{:?} does not match a rank-{} problem on {}x{}",
            x0.u.shape(),
            x0.v.shape(),
            prob.rank(),
            prob.m(),
            prob.n()
        )));
    }
    Ok(())
}

/// `Δ² = −⟨∇Φ, D⟩` or `‖∇Φ‖²`, given the gradient blocks.
pub(crate) fn decrease_measure(
    measure: ArmijoMeasure,
    g_u: &DenseMatrix,
    g_v: &DenseMatrix,
    dir: &Direction,
) -> f64 {
    match measure {
        ArmijoMeasure::Directional => -(g_u.dot(&dir.d_u) + g_v.dot(&dir.d_v)),
        ArmijoMeasure::Gradient => g_u.norm_sq() + g_v.norm_sq(),
    }
}

pub(crate) fn gn_loop(
    prob: &Problem,
    x0: &FactorPair,
    cfg: &SolverConfig,
    full_step: bool,
) -> Result<(FactorPair, IterationTrace)> {
    cfg.validate()?;
    check_start(prob, x0)?;
    let l = prob.lipschitz();
    let b_norm = prob.b_norm();
    let mut tb = TraceBuilder::new(cfg.timing);
    let mut x = x0.clone();
    let mut eval = prob.evaluate(&x.u, &x.v)?;

    for k in 0..=cfg.max_iters {
        let (g_u, g_v) = grad_blocks_from(&eval.phi_prime, &x.u, &x.v);
        let grad_norm = (g_u.norm_sq() + g_v.norm_sq()).sqrt();
        let mut rec = IterationRecord::new(k, eval.value, grad_norm);
        if !eval.value.is_finite() || !grad_norm.is_finite() {
            tb.push(rec);
            return Ok((x, tb.finish(Status::NonFinite)));
        }

        let z = eval.phi_prime.scaled(-1.0 / l);
        let dir = match gn_direction(&x, &z) {
            Ok(d) => Some(d),
            Err(Error::RankDeficient { .. }) => None,
            Err(e) => return Err(e),
        };
        let state = StopState {
            b_norm,
            grad: Some((g_v.norm(), g_u.norm())),
            direction: dir.as_ref().map(|d| (d.d_u.norm(), d.d_v.norm())),
            direction_scale: None,
            feasibility: None,
            residual: cfg.zero_residual.then(|| norm2(&eval.residual)),
        };
        if let Some(rule) = check_stop(&state, cfg) {
            tb.push(rec);
            return Ok((x, tb.finish(Status::Converged(rule))));
        }
        let Some(dir) = dir else {
            tb.push(rec);
            return Ok((x, tb.finish(Status::RankDeficient)));
        };
        if k == cfg.max_iters {
            tb.push(rec);
            return Ok((x, tb.finish(Status::MaxIters)));
        }

        let delta = decrease_measure(cfg.armijo, &g_u, &g_v, &dir);
        rec.descent = Some(delta);
        if full_step {
            rec.alpha = 1.0;
            x = x.step(&dir, 1.0);
        } else {
            match linesearch(prob, &x, &dir, eval.value, delta, cfg) {
                Ok(out) => {
                    rec.alpha = out.alpha;
                    rec.linesearch = out.trials;
                    x = x.step(&dir, out.alpha);
                }
                Err(Error::LinesearchExhausted(cap)) => {
                    rec.linesearch = cap;
                    tb.push(rec);
                    return Ok((x, tb.finish(Status::LinesearchExhausted)));
                }
                Err(e) => return Err(e),
            }
        }
        tb.push(rec);
        eval = prob.evaluate(&x.u, &x.v)?;
    }
    unreachable!("loop returns at k == max_iters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearOperator;
    use crate::rng;
    use crate::solvers::{init_point, StopRule};

    fn factorization_problem(m: usize, n: usize, r: usize, seed: u64) -> (Problem, DenseMatrix) {
        let mut g = rng::seeded(seed);
        let truth = rng::gaussian_matrix(m, r, &mut g).matmul_t(&rng::gaussian_matrix(n, r, &mut g));
        let op = LinearOperator::identity(m, n);
        let b = op.apply(&truth).unwrap();
        (Problem::least_squares(op, b, r).unwrap(), truth)
    }

    #[test]
    fn starting_at_solution_stops_immediately() {
        let mut g = rng::seeded(2);
        let x0 = FactorPair::new(rng::gaussian_matrix(5, 2, &mut g), rng::gaussian_matrix(4, 2, &mut g)).unwrap();
        let op = LinearOperator::identity(5, 4);
        let prob = Problem::least_squares(op.clone(), op.apply(&x0.product()).unwrap(), 2).unwrap();
        let (_, trace) = solve_lsgn(&prob, &x0, &SolverConfig::default()).unwrap();
        assert_eq!(trace.status, Status::Converged(StopRule::Cond1));
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn noiseless_factorization_converges() {
        let (prob, truth) = factorization_problem(16, 16, 2, 5);
        let mut g = rng::seeded(6);
        let x0 = FactorPair::new(rng::gaussian_matrix(16, 2, &mut g), rng::gaussian_matrix(16, 2, &mut g)).unwrap();
        let cfg = SolverConfig { max_iters: 100, eps1: 1e-10, ..Default::default() };
        let (x, trace) = solve_lsgn(&prob, &x0, &cfg).unwrap();
        assert!(trace.status.is_converged(), "{:?}", trace.status);
        let rel = 0.5 * (&x.product() - &truth).norm_sq() / truth.norm_sq();
        assert!(rel <= 1e-12, "relative objective {rel:e}");
        assert!(trace.objectives().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn wrong_start_shape_is_an_error() {
        let (prob, _) = factorization_problem(6, 5, 2, 1);
        let x0 = FactorPair::new(DenseMatrix::eye(6, 1), DenseMatrix::eye(5, 1)).unwrap();
        assert!(solve_lsgn(&prob, &x0, &SolverConfig::default()).is_err());
        let x0 = init_point(&prob).unwrap();
        assert!(solve_lsgn(&prob, &x0, &SolverConfig::default()).is_ok());
    }

    #[test]
    fn rank_deficient_start_is_reported() {
        let (prob, _) = factorization_problem(6, 5, 2, 1);
        let x0 = FactorPair::new(DenseMatrix::zeros(6, 2), DenseMatrix::eye(5, 2)).unwrap();
        let (_, trace) = solve_lsgn(&prob, &x0, &SolverConfig::default()).unwrap();
        assert_eq!(trace.status, Status::RankDeficient);
    }
}
