use super::SolverConfig;
use crate::direction::{Direction, FactorPair};
use crate::error::{Error, Result};
use crate::objectives::Problem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinesearchOutcome {
    pub alpha: f64,
    /// Number of rejected trials `i_k`; `alpha = β^{i_k} α₀`.
    pub trials: usize,
    /// Objective at the accepted point.
    pub value: f64,
}

/// Armijo backtracking along a ray: the first `i` with
/// `f(β^i α₀) ≤ f0 − ½ c₁ β^i α₀ Δ²`.
///
/// `eval` returns the objective at step length `α`. Non-finite trial values
/// count as rejections.
pub fn backtrack(
    f0: f64,
    delta_sq: f64,
    cfg: &SolverConfig,
    mut eval: impl FnMut(f64) -> Result<f64>,
) -> Result<LinesearchOutcome> {
    let mut alpha = cfg.alpha0;
    for trials in 0..cfg.linesearch_cap {
        let value = eval(alpha)?;
        if value.is_finite() && value <= f0 - 0.5 * cfg.c1 * alpha * delta_sq {
            return Ok(LinesearchOutcome { alpha, trials, value });
        }
        alpha *= cfg.beta;
    }
    Err(Error::LinesearchExhausted(cfg.linesearch_cap))
}

/// Backtracking on `Φ(U + αD_U, V + αD_V)` starting from value `f0`.
pub fn linesearch(
    prob: &Problem,
    x: &FactorPair,
    dir: &Direction,
    f0: f64,
    delta_sq: f64,
    cfg: &SolverConfig,
) -> Result<LinesearchOutcome> {
    backtrack(f0, delta_sq, cfg, |alpha| {
        let trial = x.step(dir, alpha);
        prob.value(&trial.u, &trial.v)
    })
}
