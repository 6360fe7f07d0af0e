use super::trace::TraceBuilder;
use super::{DualStep, IterationRecord, IterationTrace, Rho, SolverConfig, Status, StopRule};
use crate::direction::FactorPair;
use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, DenseMatrix};
use crate::objectives::{prox_l1, Problem};
use crate::operators::OperatorKind;

fn l1_norm(x: &DenseMatrix) -> f64 {
    x.data().iter().map(|v| v.abs()).sum()
}

/// Penalty used by [`solve_l1`] when `rho` is `auto`: the reciprocal of the
/// mean absolute entry of `B`.
pub fn l1_auto_rho(b: &DenseMatrix) -> f64 {
    let mean = l1_norm(b) / (b.rows() * b.cols()).max(1) as f64;
    if mean > 0.0 {
        1.0 / mean
    } else {
        1.0
    }
}

/// `min ‖UVᵀ − B‖₁` through the slack `W = UVᵀ − B`:
///
/// ```text
/// V₊ᵀ = U†(B + W − Λ)
/// U₊  = U + (B + W − Λ − UV₊ᵀ)(V†)ᵀ
/// W₊  = prox_{‖·‖₁/ρ}(U₊V₊ᵀ − B + Λ)
/// Λ₊  = Λ + (U₊V₊ᵀ − W₊ − B)        (times ρ with `dual_step = rho`)
/// ```
///
/// The trace objective is `‖UVᵀ − B‖₁ / ‖B‖₁`; `feasibility` holds
/// `‖UVᵀ − W − B‖`. No monotonicity is enforced.
pub fn solve_l1(prob: &Problem, x0: &FactorPair, cfg: &SolverConfig) -> Result<(FactorPair, IterationTrace)> {
    cfg.validate()?;
    if !matches!(prob.op().kind(), OperatorKind::Identity) {
        return Err(Error::Unsupported("l1 recovery needs the identity operator".into()));
    }
    super::lsgn::check_start(prob, x0)?;
    let b = prob.op().adjoint(prob.b())?;
    let b_l1 = l1_norm(&b).max(f64::MIN_POSITIVE);
    let tol = cfg.eps1 * prob.b_norm().max(1.0);
    let mut rho = match cfg.rho {
        Rho::Auto => l1_auto_rho(&b),
        Rho::Fixed(r) => r,
    };
    let mut tb = TraceBuilder::new(cfg.timing);
    let mut x = x0.clone();
    let mut w = DenseMatrix::zeros(b.rows(), b.cols());
    let mut lambda = DenseMatrix::zeros(b.rows(), b.cols());
    let mut feas = (&x.product() - &b).norm();
    let mut feas_history = vec![feas];

    for k in 0..=cfg.max_iters {
        let prod = x.product();
        let resid = &prod - &b;
        let mut rec = IterationRecord::new(k, l1_norm(&resid) / b_l1, 0.0);
        rec.feasibility = Some(feas);
        if !rec.objective.is_finite() {
            tb.push(rec);
            return Ok((x, tb.finish(Status::NonFinite)));
        }
        let mut target = &b + &w;
        target.axpy(-1.0, &lambda);
        let next = pseudo_inverse(&x.u).and_then(|u_pinv| {
            let v_pinv = pseudo_inverse(&x.v)?;
            let v = u_pinv.matmul(&target).transpose();
            let mut u = x.u.clone();
            u.axpy(1.0, &(&target - &x.u.matmul_t(&v)).matmul_t(&v_pinv));
            Ok(FactorPair { u, v })
        });
        let next = match next {
            Ok(n) => n,
            Err(Error::RankDeficient { .. }) => {
                tb.push(rec);
                return Ok((x, tb.finish(Status::RankDeficient)));
            }
            Err(e) => return Err(e),
        };
        let step = (&next.u - &x.u).norm().max((&next.v - &x.v).norm());
        if k > 0 && step <= tol && feas <= tol {
            tb.push(rec);
            return Ok((x, tb.finish(Status::Converged(StopRule::Cond3))));
        }
        if k == cfg.max_iters {
            tb.push(rec);
            return Ok((x, tb.finish(Status::MaxIters)));
        }
        rec.alpha = 1.0;
        tb.push(rec);

        x = next;
        let prod = x.product();
        let mut q = &prod - &b;
        q.axpy(1.0, &lambda);
        w = prox_l1(&q, 1.0 / rho);
        let mut gap = &prod - &w;
        gap.axpy(-1.0, &b);
        let coef = match cfg.dual_step {
            DualStep::Unit => 1.0,
            DualStep::Rho => rho,
        };
        lambda.axpy(coef, &gap);
        feas = gap.norm();
        feas_history.push(feas);
        if cfg.rho_adapt && feas_history.len() > 10 {
            let old = feas_history[feas_history.len() - 11];
            if feas > 0.95 * old && rho < 1e6 {
                let next_rho = (rho * 1.1).min(1e6);
                if cfg.dual_step == DualStep::Unit {
                    // Λ is the scaled multiplier; keep the unscaled one fixed.
                    lambda = lambda.scaled(rho / next_rho);
                }
                rho = next_rho;
                feas_history.clear();
                feas_history.push(feas);
            }
        }
    }
    unreachable!("loop returns at k == max_iters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearOperator;
    use crate::rng;

    #[test]
    fn exact_rank_start_is_a_fixed_point() {
        let mut g = rng::seeded(8);
        let x0 = FactorPair::new(rng::gaussian_matrix(7, 2, &mut g), rng::gaussian_matrix(6, 2, &mut g)).unwrap();
        let op = LinearOperator::identity(7, 6);
        let prob = Problem::least_squares(op.clone(), op.apply(&x0.product()).unwrap(), 2).unwrap();
        let cfg = SolverConfig { max_iters: 5, ..Default::default() };
        let (x, trace) = solve_l1(&prob, &x0, &cfg).unwrap();
        assert!((&x.product() - &x0.product()).norm() <= 1e-10);
        assert!(trace.records.iter().all(|r| r.objective <= 1e-12));
    }

    #[test]
    fn rejects_sampling_operators() {
        let omega = crate::operators::IndexSet::new(vec![(0, 0), (1, 1)]).unwrap();
        let op = LinearOperator::selection(2, 2, omega).unwrap();
        let prob = Problem::least_squares(op, vec![1.0, 2.0], 1).unwrap();
        let x0 = FactorPair::new(DenseMatrix::eye(2, 1), DenseMatrix::eye(2, 1)).unwrap();
        assert!(matches!(solve_l1(&prob, &x0, &SolverConfig::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn auto_rho_is_inverse_mean_magnitude() {
        let b = DenseMatrix::from_rows(&[&[2.0, -2.0], &[0.0, 4.0]]);
        assert_eq!(l1_auto_rho(&b), 0.5);
    }
}
