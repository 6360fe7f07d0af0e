use super::linesearch::backtrack;
use super::trace::TraceBuilder;
use super::{check_stop, ArmijoMeasure, IterationRecord, IterationTrace, SolverConfig, Status, StopState};
use crate::direction::symmetric_direction;
use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::objectives::Problem;

/// `∇Φ(U) = (Φ′ + Φ′ᵀ) U` for `Φ(U) = φ(A(UUᵀ) − B)`.
pub fn symmetric_grad(phi_prime: &DenseMatrix, u: &DenseMatrix) -> DenseMatrix {
    let mut g = phi_prime.matmul(u);
    g.axpy(1.0, &phi_prime.t_matmul(u));
    g
}

/// Symmetric linesearch Gauss–Newton for `min_U φ(A(UUᵀ) − B)`.
///
/// Stops when `‖UᵀΦ′‖ ≤ ε₁ max(1, ‖B‖)` or `‖D_U‖ ≤ ε₁ max(1, ‖U‖)`.
/// `B` need not be positive semidefinite.
pub fn solve_slsgn(prob: &Problem, u0: &DenseMatrix, cfg: &SolverConfig) -> Result<(DenseMatrix, IterationTrace)> {
    cfg.validate()?;
    if prob.m() != prob.n() {
        return Err(Error::dims(format!("symmetric problem needs a square operator, got {}x{}", prob.m(), prob.n())));
    }
    if u0.rows() != prob.m() || u0.cols() != prob.rank() {
        return Err(Error::dims(format!("u0 is {:?}, expected {}x{}", u0.shape(), prob.m(), prob.rank())));
    }
    let l = prob.lipschitz();
    let b_norm = prob.b_norm();
    let mut tb = TraceBuilder::new(cfg.timing);
    let mut u = u0.clone();
    let mut eval = prob.evaluate(&u, &u)?;

    for k in 0..=cfg.max_iters {
        let grad = symmetric_grad(&eval.phi_prime, &u);
        let mut rec = IterationRecord::new(k, eval.value, grad.norm());
        if !eval.value.is_finite() || !rec.grad_norm.is_finite() {
            tb.push(rec);
            return Ok((u, tb.finish(Status::NonFinite)));
        }
        let z = eval.phi_prime.scaled(-1.0 / l);
        let dir = match symmetric_direction(&u, &z) {
            Ok(d) => Some(d),
            Err(Error::RankDeficient { .. }) => None,
            Err(e) => return Err(e),
        };
        let opt = eval.phi_prime.t_matmul(&u).norm();
        let state = StopState {
            b_norm,
            grad: Some((opt, opt)),
            direction: dir.as_ref().map(|d| (d.norm(), 0.0)),
            direction_scale: Some(u.norm()),
            feasibility: None,
            residual: cfg.zero_residual.then(|| norm2(&eval.residual)),
        };
        if let Some(rule) = check_stop(&state, cfg) {
            tb.push(rec);
            return Ok((u, tb.finish(Status::Converged(rule))));
        }
        let Some(dir) = dir else {
            tb.push(rec);
            return Ok((u, tb.finish(Status::RankDeficient)));
        };
        if k == cfg.max_iters {
            tb.push(rec);
            return Ok((u, tb.finish(Status::MaxIters)));
        }
        let delta = match cfg.armijo {
            ArmijoMeasure::Directional => -grad.dot(&dir),
            ArmijoMeasure::Gradient => grad.norm_sq(),
        };
        rec.descent = Some(delta);
        let trial = |alpha: f64| {
            let mut t = u.clone();
            t.axpy(alpha, &dir);
            t
        };
        match backtrack(eval.value, delta, cfg, |alpha| {
            let t = trial(alpha);
            prob.value(&t, &t)
        }) {
            Ok(out) => {
                rec.alpha = out.alpha;
                rec.linesearch = out.trials;
                u = trial(out.alpha);
            }
            Err(Error::LinesearchExhausted(cap)) => {
                rec.linesearch = cap;
                tb.push(rec);
                return Ok((u, tb.finish(Status::LinesearchExhausted)));
            }
            Err(e) => return Err(e),
        }
        tb.push(rec);
        eval = prob.evaluate(&u, &u)?;
    }
    unreachable!("loop returns at k == max_iters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearOperator;
    use crate::rng;

    #[test]
    fn exact_start_terminates() {
        let u0 = rng::gaussian_matrix(6, 2, &mut rng::seeded(1));
        let op = LinearOperator::identity(6, 6);
        let prob = Problem::least_squares(op.clone(), op.apply(&u0.matmul_t(&u0)).unwrap(), 2).unwrap();
        let (_, trace) = solve_slsgn(&prob, &u0, &SolverConfig::default()).unwrap();
        assert!(trace.status.is_converged());
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn asymmetric_data_is_rejected() {
        let op = LinearOperator::identity(3, 3);
        let b = DenseMatrix::from_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let prob = Problem::least_squares(op.clone(), op.apply(&b).unwrap(), 1).unwrap();
        let u0 = DenseMatrix::from_rows(&[&[1.0], &[1.0], &[0.0]]);
        assert!(matches!(solve_slsgn(&prob, &u0, &SolverConfig::default()), Err(Error::AsymmetricInput(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut g = rng::seeded(5);
        let half = rng::gaussian_matrix(4, 4, &mut g);
        let b = &half + &half.transpose();
        let op = LinearOperator::identity(4, 4);
        let prob = Problem::least_squares(op.clone(), op.apply(&b).unwrap(), 2).unwrap();
        let u = rng::gaussian_matrix(4, 2, &mut g);
        let grad = symmetric_grad(&prob.phi_prime(&u, &u).unwrap(), &u);
        let h = 1e-6;
        for i in 0..4 {
            for j in 0..2 {
                let mut up = u.clone();
                up[(i, j)] += h;
                let mut dn = u.clone();
                dn[(i, j)] -= h;
                let fd = (prob.value(&up, &up).unwrap() - prob.value(&dn, &dn).unwrap()) / (2.0 * h);
                assert!((fd - grad[(i, j)]).abs() <= 1e-6 * grad[(i, j)].abs().max(1.0));
            }
        }
    }
}
