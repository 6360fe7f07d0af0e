use super::lsgn::{check_start, gn_loop};
use super::trace::TraceBuilder;
use super::{check_stop, IterationRecord, IterationTrace, SolverConfig, Status, StopState};
use crate::direction::FactorPair;
use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, DenseMatrix};
use crate::objectives::Problem;

/// Full-step Gauss–Newton: the damped scheme with `α ≡ 1` and no
/// linesearch. The objective is not guaranteed to decrease.
pub fn solve_fsgn(prob: &Problem, x0: &FactorPair, cfg: &SolverConfig) -> Result<(FactorPair, IterationTrace)> {
    check_start(prob, x0)?;
    gn_loop(prob, x0, cfg, true)
}

/// Full-step GN for `½‖UVᵀ − B‖²` written with two small inverses:
/// `V_{k+1}ᵀ = U_k† B`, `U_{k+1} = U_k + (B − U_k V_{k+1}ᵀ)(V_k†)ᵀ`.
///
/// Pair with [`crate::linalg::rayleigh_ritz`] to obtain singular triples.
pub fn solve_factorization(b: &DenseMatrix, x0: &FactorPair, cfg: &SolverConfig) -> Result<(FactorPair, IterationTrace)> {
    cfg.validate()?;
    if x0.u.rows() != b.rows() || x0.v.rows() != b.cols() {
        return Err(Error::dims(format!(
            "start point {:?}/{:?} does not match a {}x{} matrix",
            x0.u.shape(),
            x0.v.shape(),
            b.rows(),
            b.cols()
        )));
    }
    let b_norm = b.norm();
    let mut tb = TraceBuilder::new(cfg.timing);
    let mut x = x0.clone();
    for k in 0..=cfg.max_iters {
        let resid = &x.product() - b;
        let g_u = resid.matmul(&x.v);
        let g_v = resid.t_matmul(&x.u);
        let mut rec = IterationRecord::new(k, 0.5 * resid.norm_sq(), (g_u.norm_sq() + g_v.norm_sq()).sqrt());
        if !rec.objective.is_finite() {
            tb.push(rec);
            return Ok((x, tb.finish(Status::NonFinite)));
        }
        let next = pseudo_inverse(&x.u).and_then(|u_pinv| {
            let v_pinv = pseudo_inverse(&x.v)?;
            let v_next = u_pinv.matmul(b).transpose();
            let mut u_next = x.u.clone();
            u_next.axpy(1.0, &(b - &x.u.matmul_t(&v_next)).matmul_t(&v_pinv));
            Ok(FactorPair { u: u_next, v: v_next })
        });
        let next = match next {
            Ok(n) => Some(n),
            Err(Error::RankDeficient { .. }) => None,
            Err(e) => return Err(e),
        };
        let state = StopState {
            b_norm,
            grad: Some((g_v.norm(), g_u.norm())),
            direction: next.as_ref().map(|n| ((&n.u - &x.u).norm(), (&n.v - &x.v).norm())),
            direction_scale: None,
            feasibility: None,
            residual: cfg.zero_residual.then(|| resid.norm()),
        };
        if let Some(rule) = check_stop(&state, cfg) {
            tb.push(rec);
            return Ok((x, tb.finish(Status::Converged(rule))));
        }
        let Some(next) = next else {
            tb.push(rec);
            return Ok((x, tb.finish(Status::RankDeficient)));
        };
        if k == cfg.max_iters {
            tb.push(rec);
            return Ok((x, tb.finish(Status::MaxIters)));
        }
        rec.alpha = 1.0;
        tb.push(rec);
        x = next;
    }
    unreachable!("loop returns at k == max_iters")
}

/// `U₀ = [I_r; 0]`, `V₀ = [0; I_r]`.
pub fn factorization_start(m: usize, n: usize, r: usize) -> FactorPair {
    let v = DenseMatrix::from_fn(n, r, |i, j| if i + r == n + j { 1.0 } else { 0.0 });
    FactorPair { u: DenseMatrix::eye(m, r), v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rayleigh_ritz, truncated_svd};
    use crate::direction::{gn_direction, Direction};
    use crate::rng;

    #[test]
    fn start_layout() {
        let x = factorization_start(4, 3, 2);
        assert_eq!(x.u, DenseMatrix::eye(4, 2));
        assert_eq!(x.v, DenseMatrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]));
    }

    #[test]
    fn recursion_recovers_exact_rank() {
        let mut g = rng::seeded(3);
        let b = rng::gaussian_matrix(30, 3, &mut g).matmul_t(&rng::gaussian_matrix(25, 3, &mut g));
        let cfg = SolverConfig { max_iters: 50, eps1: 1e-12, ..Default::default() };
        let (x, _) = solve_factorization(&b, &factorization_start(30, 25, 3), &cfg).unwrap();
        assert!((&x.product() - &b).norm() <= 1e-8 * b.norm());
        let rr = rayleigh_ritz(&x.u, &x.v, &b).unwrap();
        let svd = truncated_svd(&b, 3).unwrap();
        for (a, s) in rr.sigma.iter().zip(&svd.sigma) {
            assert!((a - s).abs() <= 1e-8 * s);
        }
    }

    #[test]
    fn recursion_step_solves_the_gn_subproblem() {
        let mut g = rng::seeded(4);
        let b = rng::gaussian_matrix(8, 6, &mut g);
        let x0 = FactorPair::new(rng::gaussian_matrix(8, 2, &mut g), rng::gaussian_matrix(6, 2, &mut g)).unwrap();
        let cfg = SolverConfig { max_iters: 1, ..Default::default() };
        let (x1, _) = solve_factorization(&b, &x0, &cfg).unwrap();
        let step = Direction { d_u: &x1.u - &x0.u, d_v: &x1.v - &x0.v };
        let z = &b - &x0.product();
        let gn = gn_direction(&x0, &z).unwrap();
        assert!((&step.tangent(&x0) - &gn.tangent(&x0)).norm() <= 1e-10 * z.norm());
    }
}
