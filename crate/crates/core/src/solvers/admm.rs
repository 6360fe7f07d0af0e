use super::linesearch::backtrack;
use super::lsgn::check_start;
use super::trace::TraceBuilder;
use super::{
    check_stop, AdmmRecord, ArmijoMeasure, IterationRecord, IterationTrace, Rho, SolverConfig, Status, StopState,
    WStep,
};
use crate::direction::{gn_direction, FactorPair};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Cholesky, DenseMatrix};
use crate::objectives::{grad_blocks_from, Problem, SmoothObjective};

const RHO_GROWTH: f64 = 1.1;
const RHO_CAP: f64 = 1e6;
const RHO_WINDOW: usize = 10;

/// 1.01 times the penalty threshold of the convergence theory:
/// `½(√(μ_φ + 8L_φ²) + μ_φ)` for the prox step, `3L_φ` for the gradient step.
pub fn auto_rho(option: WStep, l_phi: f64, mu_phi: f64) -> f64 {
    match option {
        WStep::Prox => 1.01 * 0.5 * ((mu_phi + 8.0 * l_phi * l_phi).sqrt() + mu_phi),
        WStep::Gradient => 3.01 * l_phi,
    }
}

/// `(η₁, η₀)` of the augmented-Lagrangian descent inequality.
pub fn eta_constants(option: WStep, rho: f64, l_phi: f64, mu_phi: f64) -> (f64, f64) {
    match option {
        WStep::Prox => ((rho * rho + mu_phi * rho - 2.0 * l_phi * l_phi) / rho, 0.0),
        WStep::Gradient => ((rho * rho + l_phi * rho - 4.0 * l_phi * l_phi) / rho, 8.0 * l_phi * l_phi / rho),
    }
}

/// Primal-dual state `(U, V, W, Λ)` of the slack reformulation
/// `min φ(W) s.t. A(UVᵀ) − W = B`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: FactorPair,
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    pub rho: f64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum UvStep {
    GaussNewton,
    Ridge,
}

/// GN-ADMM: one Gauss–Newton step with backtracking on the `(U, V)` block,
/// then the `W` step (exact prox or linearized gradient) and the multiplier
/// step.
///
/// Starts from `W₀ = A(U₀V₀ᵀ) − B`, `Λ₀ = 0`.
pub fn solve_gn_admm(prob: &Problem, x0: &FactorPair, cfg: &SolverConfig) -> Result<(AdmmState, IterationTrace)> {
    admm_loop(prob, x0, cfg, UvStep::GaussNewton)
}

/// ADMM whose `(U, V)` block is one ridge-regularized alternating
/// least-squares sweep on the linearized target `U_kV_kᵀ + Z_k`.
pub fn solve_rad_admm(prob: &Problem, x0: &FactorPair, cfg: &SolverConfig) -> Result<(AdmmState, IterationTrace)> {
    admm_loop(prob, x0, cfg, UvStep::Ridge)
}

fn resolve_rho(cfg: &SolverConfig, phi: &dyn SmoothObjective) -> f64 {
    match cfg.rho {
        Rho::Fixed(r) => r,
        Rho::Auto => auto_rho(cfg.option, phi.l_phi(), phi.mu_phi()),
    }
}

fn lagrangian(phi: &dyn SmoothObjective, w: &[f64], lambda: &[f64], c: &[f64], rho: f64) -> f64 {
    phi.value(w) + dot(lambda, c) + 0.5 * rho * dot(c, c)
}

fn admm_loop(
    prob: &Problem,
    x0: &FactorPair,
    cfg: &SolverConfig,
    uv_step: UvStep,
) -> Result<(AdmmState, IterationTrace)> {
    cfg.validate()?;
    check_start(prob, x0)?;
    let phi = prob.phi();
    let op = prob.op();
    let b = prob.b();
    let l_a = prob.l_a();
    let l_phi = phi.l_phi();
    let b_norm = prob.b_norm();
    let mut rho = resolve_rho(cfg, phi);
    if cfg.option == WStep::Prox && phi.prox(&[0.0], 1.0).is_none() {
        return Err(Error::Unsupported(format!("loss `{}` has no closed-form prox", phi.name())));
    }

    let mut x = x0.clone();
    let mut auv = op.apply_product(&x.u, &x.v)?;
    let mut w: Vec<f64> = auv.iter().zip(b).map(|(a, b)| a - b).collect();
    let mut lambda = vec![0.0; w.len()];
    let mut feas_history: Vec<f64> = Vec::new();
    let mut tb = TraceBuilder::new(cfg.timing);

    for k in 0..=cfg.max_iters {
        let resid: Vec<f64> = auv.iter().zip(b).map(|(a, b)| a - b).collect();
        let objective = phi.value(&resid);
        let phi_prime = op.adjoint(&phi.gradient(&resid))?;
        let (g_u, g_v) = grad_blocks_from(&phi_prime, &x.u, &x.v);
        let c: Vec<f64> = resid.iter().zip(&w).map(|(r, w)| r - w).collect();
        let feasibility = norm2(&c);
        let mut rec = IterationRecord::new(k, objective, (g_u.norm_sq() + g_v.norm_sq()).sqrt());
        rec.feasibility = Some(feasibility);
        rec.lagrangian = Some(lagrangian(phi, &w, &lambda, &c, rho));
        let state = |x_out: FactorPair, w: Vec<f64>, lambda: Vec<f64>| AdmmState { x: x_out, w, lambda, rho };
        if !objective.is_finite() || !feasibility.is_finite() {
            tb.push(rec);
            return Ok((state(x, w, lambda), tb.finish(Status::NonFinite)));
        }

        let optimality = StopState {
            b_norm,
            grad: Some((g_v.norm(), g_u.norm())),
            direction: None,
            direction_scale: None,
            feasibility: None,
            residual: cfg.zero_residual.then(|| norm2(&resid)),
        };
        if let Some(rule) = check_stop(&optimality, cfg) {
            if feasibility <= cfg.eps1 * b_norm.max(1.0) {
                tb.push(rec);
                return Ok((state(x, w, lambda), tb.finish(Status::Converged(rule))));
            }
        }
        if k == cfg.max_iters {
            tb.push(rec);
            return Ok((state(x, w, lambda), tb.finish(Status::MaxIters)));
        }

        // (U, V) block on Q_k(U, V) = ½‖A(UVᵀ) − W − B + Λ/ρ‖².
        let target_resid: Vec<f64> = c.iter().zip(&lambda).map(|(c, l)| c + l / rho).collect();
        let q_before = 0.5 * dot(&target_resid, &target_resid);
        let q_grad = op.adjoint(&target_resid)?;
        let z = q_grad.scaled(-1.0 / l_a);
        let mut admm = AdmmRecord { rho, surrogate_before: q_before, ..Default::default() };
        let surrogate = |u: &DenseMatrix, v: &DenseMatrix| -> Result<f64> {
            let a = op.apply_product(u, v)?;
            let mut s = 0.0;
            for i in 0..a.len() {
                let t = (a[i] - b[i]) - w[i] + lambda[i] / rho;
                s += t * t;
            }
            Ok(0.5 * s)
        };

        let next = match uv_step {
            UvStep::GaussNewton => {
                let dir = match gn_direction(&x, &z) {
                    Ok(d) => d,
                    Err(Error::RankDeficient { .. }) => {
                        tb.push(rec);
                        return Ok((state(x, w, lambda), tb.finish(Status::RankDeficient)));
                    }
                    Err(e) => return Err(e),
                };
                let (qg_u, qg_v) = grad_blocks_from(&q_grad, &x.u, &x.v);
                let delta = match cfg.armijo {
                    ArmijoMeasure::Directional => -(qg_u.dot(&dir.d_u) + qg_v.dot(&dir.d_v)),
                    ArmijoMeasure::Gradient => qg_u.norm_sq() + qg_v.norm_sq(),
                };
                rec.descent = Some(delta);
                match backtrack(q_before, delta, cfg, |alpha| {
                    let t = x.step(&dir, alpha);
                    surrogate(&t.u, &t.v)
                }) {
                    Ok(out) => {
                        rec.alpha = out.alpha;
                        rec.linesearch = out.trials;
                        admm.surrogate_after = out.value;
                        x.step(&dir, out.alpha)
                    }
                    Err(Error::LinesearchExhausted(cap)) => {
                        rec.linesearch = cap;
                        tb.push(rec);
                        return Ok((state(x, w, lambda), tb.finish(Status::LinesearchExhausted)));
                    }
                    Err(e) => return Err(e),
                }
            }
            UvStep::Ridge => {
                let mut target = x.product();
                target.axpy(1.0, &z);
                let next = ridge_step(&x, &target, cfg.gamma_u, cfg.gamma_v)?;
                rec.alpha = 1.0;
                admm.surrogate_after = surrogate(&next.u, &next.v)?;
                next
            }
        };
        admm.u_step = (&next.u - &x.u).norm();
        admm.v_step = (&next.v - &x.v).norm();
        x = next;
        auv = op.apply_product(&x.u, &x.v)?;

        // W block.
        let w_next: Vec<f64> = match cfg.option {
            WStep::Prox => {
                let q: Vec<f64> = (0..w.len()).map(|i| auv[i] - b[i] + lambda[i] / rho).collect();
                phi.prox(&q, rho).expect("prox availability checked above")
            }
            WStep::Gradient => {
                let grad = phi.gradient(&w);
                (0..w.len())
                    .map(|i| (l_phi * w[i] - grad[i] + lambda[i] + rho * (auv[i] - b[i])) / (rho + l_phi))
                    .collect()
            }
        };
        admm.w_step = w_next.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        w = w_next;

        // Multiplier block.
        let mut dl_sq = 0.0;
        for i in 0..lambda.len() {
            let d = rho * (auv[i] - w[i] - b[i]);
            lambda[i] += d;
            dl_sq += d * d;
        }
        admm.multiplier_step = dl_sq.sqrt();
        rec.admm = Some(admm);
        tb.push(rec);

        if cfg.rho_adapt {
            feas_history.push(feasibility);
            if feas_history.len() > RHO_WINDOW {
                let old = feas_history[feas_history.len() - 1 - RHO_WINDOW];
                if feasibility > 0.95 * old && rho < RHO_CAP {
                    rho = (rho * RHO_GROWTH).min(RHO_CAP);
                    feas_history.clear();
                }
            }
        }
    }
    unreachable!("loop returns at k == max_iters")
}

/// `U₊ = (TV + γ_u U)(VᵀV + γ_u I)⁻¹`, then
/// `V₊ = (TᵀU₊ + γ_v V)(U₊ᵀU₊ + γ_v I)⁻¹`.
pub(crate) fn ridge_step(x: &FactorPair, target: &DenseMatrix, gamma_u: f64, gamma_v: f64) -> Result<FactorPair> {
    let r = x.rank();
    let gram_v = &x.v.t_matmul(&x.v) + &DenseMatrix::identity(r).scaled(gamma_u);
    let mut rhs_u = target.matmul(&x.v);
    rhs_u.axpy(gamma_u, &x.u);
    let u = Cholesky::new(&gram_v)?.solve_right(&rhs_u);
    let gram_u = &u.t_matmul(&u) + &DenseMatrix::identity(r).scaled(gamma_v);
    let mut rhs_v = target.t_matmul(&u);
    rhs_v.axpy(gamma_v, &x.v);
    let v = Cholesky::new(&gram_u)?.solve_right(&rhs_v);
    Ok(FactorPair { u, v })
}
