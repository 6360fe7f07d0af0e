use super::lsgn::check_start;
use super::trace::TraceBuilder;
use super::{check_stop, IterationRecord, IterationTrace, SolverConfig, Status, StopState};
use crate::direction::FactorPair;
use crate::error::{Error, Result};
use crate::linalg::{norm2, pseudo_inverse, DenseMatrix};
use crate::objectives::{grad_blocks_from, Problem};

/// Alternating least squares on the GN surrogate: with target
/// `T_k = U_kV_kᵀ − Φ′/L`, solve `U_{k+1} = T_k (V_k†)ᵀ` and then
/// `V_{k+1}ᵀ = U_{k+1}† T_k`.
pub fn solve_adm(prob: &Problem, x0: &FactorPair, cfg: &SolverConfig) -> Result<(FactorPair, IterationTrace)> {
    cfg.validate()?;
    check_start(prob, x0)?;
    let l = prob.lipschitz();
    let b_norm = prob.b_norm();
    let mut tb = TraceBuilder::new(cfg.timing);
    let mut x = x0.clone();
    for k in 0..=cfg.max_iters {
        let eval = prob.evaluate(&x.u, &x.v)?;
        let (g_u, g_v) = grad_blocks_from(&eval.phi_prime, &x.u, &x.v);
        let mut rec = IterationRecord::new(k, eval.value, (g_u.norm_sq() + g_v.norm_sq()).sqrt());
        if !rec.objective.is_finite() {
            tb.push(rec);
            return Ok((x, tb.finish(Status::NonFinite)));
        }
        let mut target = x.product();
        target.axpy(-1.0 / l, &eval.phi_prime);
        let next = match adm_step(&x, &target) {
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
            residual: cfg.zero_residual.then(|| norm2(&eval.residual)),
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

pub(crate) fn adm_step(x: &FactorPair, target: &DenseMatrix) -> Result<FactorPair> {
    let v_pinv = pseudo_inverse(&x.v)?;
    let u = target.matmul_t(&v_pinv);
    let u_pinv = pseudo_inverse(&u)?;
    let v = u_pinv.matmul(target).transpose();
    Ok(FactorPair { u, v })
}
