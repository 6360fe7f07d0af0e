use std::fmt;

use super::SolverConfig;

/// Which termination test fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// `max{‖UᵀΦ′‖, ‖Φ′V‖} ≤ ε₁ max(1, ‖B‖)`.
    Cond1,
    /// `max{‖D_U‖, ‖D_V‖} ≤ ε₁ max(1, ‖B‖)`.
    Cond2,
    /// `‖A(UVᵀ) − W − B‖ ≤ ε₁ max(1, ‖B‖)`.
    Cond3,
    /// `‖A(UVᵀ) − B‖ ≤ ε₂ max(1, ‖B‖)`.
    Cond4,
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopRule::Cond1 => "cond1",
            StopRule::Cond2 => "cond2",
            StopRule::Cond3 => "cond3",
            StopRule::Cond4 => "cond4",
        })
    }
}

/// Norms available at one iterate. Tests whose inputs are absent are skipped.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StopState {
    pub b_norm: f64,
    /// `(‖UᵀΦ′‖, ‖Φ′V‖)`.
    pub grad: Option<(f64, f64)>,
    /// `(‖D_U‖, ‖D_V‖)`.
    pub direction: Option<(f64, f64)>,
    /// Replaces `‖B‖` in the direction test (the symmetric solver scales by `‖U‖`).
    pub direction_scale: Option<f64>,
    pub feasibility: Option<f64>,
    pub residual: Option<f64>,
}

/// First satisfied rule in the order 1, 2, 3, 4.
pub fn check_stop(state: &StopState, cfg: &SolverConfig) -> Option<StopRule> {
    let scale = state.b_norm.max(1.0);
    let tol1 = cfg.eps1 * scale;
    if let Some((a, b)) = state.grad {
        if a.max(b) <= tol1 {
            return Some(StopRule::Cond1);
        }
    }
    if let Some((a, b)) = state.direction {
        let tol = state.direction_scale.map_or(tol1, |s| cfg.eps1 * s.max(1.0));
        if a.max(b) <= tol {
            return Some(StopRule::Cond2);
        }
    }
    if let Some(f) = state.feasibility {
        if f <= tol1 {
            return Some(StopRule::Cond3);
        }
    }
    if let Some(r) = state.residual {
        if r <= cfg.eps2 * scale {
            return Some(StopRule::Cond4);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_norms_fire_first_rule() {
        let s = StopState {
            b_norm: 0.0,
            grad: Some((0.0, 0.0)),
            direction: Some((0.0, 0.0)),
            direction_scale: None,
            feasibility: Some(0.0),
            residual: Some(0.0),
        };
        assert_eq!(check_stop(&s, &SolverConfig::default()), Some(StopRule::Cond1));
    }

    #[test]
    fn direction_rule_when_gradient_large() {
        let s = StopState { b_norm: 10.0, grad: Some((1.0, 1.0)), direction: Some((1e-6, 0.0)), ..Default::default() };
        assert_eq!(check_stop(&s, &SolverConfig::default()), Some(StopRule::Cond2));
    }

    #[test]
    fn absent_inputs_never_fire() {
        assert_eq!(check_stop(&StopState::default(), &SolverConfig::default()), None);
    }
}
