//! Iterative schemes built on the Gauss–Newton direction.
//!
//! | function | scheme |
//! |---|---|
//! | [`solve_lsgn`] | damped GN with Armijo backtracking |
//! | [`solve_fsgn`] | full-step GN (`α = 1`) |
//! | [`solve_factorization`] | full-step GN for `‖UVᵀ − B‖²` in its two-inverse form |
//! | [`solve_adm`] | alternating least squares on the same surrogate |
//! | [`solve_gn_admm`] | ADMM on the slack reformulation, GN step for `(U, V)` |
//! | [`solve_rad_admm`] | same, ridge-regularized alternating step for `(U, V)` |
//! | [`solve_slsgn`] | symmetric `UUᵀ` variant with backtracking |
//! | [`solve_l1`] | `‖UVᵀ − B‖₁` recovery |

mod adm;
mod admm;
mod fsgn;
mod init;
mod l1;
mod linesearch;
mod lsgn;
mod stop;
mod symmetric;
mod trace;

pub use adm::solve_adm;
pub use admm::{auto_rho, eta_constants, solve_gn_admm, solve_rad_admm, AdmmState};
pub use fsgn::{factorization_start, solve_factorization, solve_fsgn};
pub use init::{init_point, least_norm_preimage};
pub use l1::{l1_auto_rho, solve_l1};
pub use linesearch::{backtrack, linesearch, LinesearchOutcome};
pub use lsgn::solve_lsgn;
pub use stop::{check_stop, StopRule, StopState};
pub use symmetric::{solve_slsgn, symmetric_grad};
pub use trace::{AdmmRecord, IterationRecord, IterationTrace, Status};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `(√5 − 1)/(√5 + 1)`.
pub fn default_beta() -> f64 {
    (5f64.sqrt() - 1.0) / (5f64.sqrt() + 1.0)
}

/// Penalty parameter for the ADMM schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho {
    /// 1.01 times the smallest value covered by the convergence theory.
    Auto,
    Fixed(f64),
}

/// How the `W` block of GN-ADMM is updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WStep {
    /// Exact proximal step (Option 1).
    Prox,
    /// One linearized gradient step (Option 2).
    Gradient,
}

/// Decrease measure on the right-hand side of the Armijo test
/// `f(X + αD) ≤ f(X) − ½ c₁ α Δ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmijoMeasure {
    /// `Δ² = −⟨∇f, D⟩`, the directional derivative along the GN direction.
    Directional,
    /// `Δ² = ‖∇f‖²`.
    Gradient,
}

/// Multiplier step of the ℓ1 scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualStep {
    /// `Λ ← Λ + (UVᵀ − W − B)`.
    Unit,
    /// `Λ ← Λ + ρ(UVᵀ − W − B)`.
    Rho,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        "unknown value `{other}` (expected one of: {})",
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

keyword_enum!(WStep { Prox => "prox", Gradient => "gradient" });
keyword_enum!(ArmijoMeasure { Directional => "directional", Gradient => "gradient" });
keyword_enum!(DualStep { Unit => "unit", Rho => "rho" });

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::Auto => f.write_str("auto"),
            Rho::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Rho {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Rho::Auto);
        }
        s.parse::<f64>()
            .map(Rho::Fixed)
            .map_err(|_| Error::InvalidArgument(format!("`{s}` is neither `auto` nor a number")))
    }
}

/// Parameters shared by every solver. Fields irrelevant to a scheme are
/// ignored by it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub c1: f64,
    pub beta: f64,
    pub alpha0: f64,
    pub rho: Rho,
    /// Grow `ρ` by 1.1 when feasibility stalls (capped at 1e6).
    pub rho_adapt: bool,
    pub option: WStep,
    pub gamma_u: f64,
    pub gamma_v: f64,
    pub linesearch_cap: usize,
    pub armijo: ArmijoMeasure,
    pub dual_step: DualStep,
    /// The optimal value is known to be zero, enabling the residual test.
    pub zero_residual: bool,
    /// Record wall-clock milliseconds in traces (otherwise 0).
    pub timing: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            eps1: 1e-6,
            eps2: 1e-4,
            c1: 0.5,
            beta: default_beta(),
            alpha0: 1.0,
            rho: Rho::Auto,
            rho_adapt: false,
            option: WStep::Prox,
            gamma_u: 1e-3,
            gamma_v: 1e-3,
            linesearch_cap: 50,
            armijo: ArmijoMeasure::Directional,
            dual_step: DualStep::Unit,
            zero_residual: false,
            timing: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Checks every range constraint, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::Validation { key: key.into(), msg: msg.into() });
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta", "must lie in (0, 1)");
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return bad("c1", "must lie in (0, 1)");
        }
        if !(self.eps1 > 0.0) {
            return bad("eps1", "must be positive");
        }
        if !(self.eps2 > 0.0) {
            return bad("eps2", "must be positive");
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad("alpha0", "must be positive");
        }
        if let Rho::Fixed(r) = self.rho {
            if !(r > 0.0 && r.is_finite()) {
                return bad("rho", "must be positive or `auto`");
            }
        }
        if !(self.gamma_u > 0.0 && self.gamma_u.is_finite()) {
            return bad("gamma_u", "must be positive");
        }
        if !(self.gamma_v > 0.0 && self.gamma_v.is_finite()) {
            return bad("gamma_v", "must be positive");
        }
        if self.linesearch_cap == 0 {
            return bad("linesearch_cap", "must be at least 1");
        }
        Ok(())
    }
}
