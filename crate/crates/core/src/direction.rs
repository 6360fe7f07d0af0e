//! Closed-form Gauss–Newton directions for the linearized subproblem
//! `min ½‖U D_Vᵀ + D_U Vᵀ − Z‖²`.
//!
//! `Z` always arrives pre-scaled by the caller; nothing here evaluates an
//! objective.

use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, singular_extremes, DenseMatrix, RANK_TOL};

/// The iterate `X = [U, V]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
}

impl FactorPair {
    pub fn new(u: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(Error::dims(format!("factor ranks differ: {} vs {}", u.cols(), v.cols())));
        }
        Ok(Self { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    /// `U Vᵀ`.
    pub fn product(&self) -> DenseMatrix {
        self.u.matmul_t(&self.v)
    }

    /// `[U + α D_U, V + α D_V]`.
    pub fn step(&self, dir: &Direction, alpha: f64) -> FactorPair {
        let mut u = self.u.clone();
        let mut v = self.v.clone();
        u.axpy(alpha, &dir.d_u);
        v.axpy(alpha, &dir.d_v);
        FactorPair { u, v }
    }

    /// `‖[U, V]‖_F`.
    pub fn norm(&self) -> f64 {
        (self.u.norm_sq() + self.v.norm_sq()).sqrt()
    }

    /// Smallest and largest singular values over both factors.
    pub fn singular_extremes(&self) -> Result<(f64, f64)> {
        let (ulo, uhi) = singular_extremes(&self.u)?;
        let (vlo, vhi) = singular_extremes(&self.v)?;
        Ok((ulo.min(vlo), uhi.max(vhi)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub d_u: DenseMatrix,
    pub d_v: DenseMatrix,
}

impl Direction {
    pub fn zeros_like(x: &FactorPair) -> Self {
        Self {
            d_u: DenseMatrix::zeros(x.u.rows(), x.u.cols()),
            d_v: DenseMatrix::zeros(x.v.rows(), x.v.cols()),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.d_u.norm_sq() + self.d_v.norm_sq()
    }

    /// `U D_Vᵀ + D_U Vᵀ`, the linearized change of `UVᵀ`.
    pub fn tangent(&self, x: &FactorPair) -> DenseMatrix {
        let mut t = x.u.matmul_t(&self.d_v);
        t.axpy(1.0, &self.d_u.matmul_t(&x.v));
        t
    }
}

fn check_z(x: &FactorPair, z: &DenseMatrix) -> Result<()> {
    if z.shape() != (x.u.rows(), x.v.rows()) {
        return Err(Error::dims(format!(
            "z is {}x{}, factors need {}x{}",
            z.rows(),
            z.cols(),
            x.u.rows(),
            x.v.rows()
        )));
    }
    Ok(())
}

/// `D_U = (I − ½P_U) Z (V†)ᵀ`, `D_Vᵀ = U† Z (I − ½P_V)`.
pub fn gn_direction(x: &FactorPair, z: &DenseMatrix) -> Result<Direction> {
    check_z(x, z)?;
    let u_pinv = pseudo_inverse(&x.u)?;
    let v_pinv = pseudo_inverse(&x.v)?;
    let mut d_u = z.matmul_t(&v_pinv);
    let half_pu = x.u.matmul(&u_pinv.matmul(&d_u));
    d_u.axpy(-0.5, &half_pu);
    let mut d_v = u_pinv.matmul(z).transpose();
    let half_pv = x.v.matmul(&v_pinv.matmul(&d_v));
    d_v.axpy(-0.5, &half_pv);
    Ok(Direction { d_u, d_v })
}

/// `D_U = P⊥_U Z (V†)ᵀ + U D̂`, `D_Vᵀ = U† Z − D̂ Vᵀ` for any `r×r` matrix `D̂`.
pub fn gn_direction_general(x: &FactorPair, z: &DenseMatrix, d_hat: &DenseMatrix) -> Result<Direction> {
    check_z(x, z)?;
    let r = x.rank();
    if d_hat.shape() != (r, r) {
        return Err(Error::dims(format!("d_hat must be {r}x{r}")));
    }
    let u_pinv = pseudo_inverse(&x.u)?;
    let v_pinv = pseudo_inverse(&x.v)?;
    let w1 = z.matmul_t(&v_pinv);
    let mut d_u = &w1 - &x.u.matmul(&u_pinv.matmul(&w1));
    d_u.axpy(1.0, &x.u.matmul(d_hat));
    let mut d_v = u_pinv.matmul(z).transpose();
    d_v.axpy(-1.0, &x.v.matmul_t(d_hat));
    Ok(Direction { d_u, d_v })
}

/// Optimal value `½‖P⊥_U Z P⊥_V‖²` of the linearized subproblem.
pub fn subproblem_value(x: &FactorPair, z: &DenseMatrix) -> Result<f64> {
    check_z(x, z)?;
    let u_pinv = pseudo_inverse(&x.u)?;
    let v_pinv = pseudo_inverse(&x.v)?;
    let left = z - &x.u.matmul(&u_pinv.matmul(z));
    let both = &left - &left.matmul_t(&v_pinv).matmul_t(&x.v);
    Ok(0.5 * both.norm_sq())
}

/// Residuals of the two normal equations
/// `UᵀU D_Vᵀ + UᵀD_U Vᵀ = UᵀZ` and `U D_Vᵀ V + D_U VᵀV = ZV`.
pub fn normal_equation_residuals(x: &FactorPair, z: &DenseMatrix, dir: &Direction) -> (DenseMatrix, DenseMatrix) {
    let t = dir.tangent(x);
    let diff = &t - z;
    (x.u.t_matmul(&diff), diff.matmul(&x.v))
}

/// Symmetric direction `D_U = (I − ½P_U) Z (U†)ᵀ` for symmetric `Z`.
pub fn symmetric_direction(u: &DenseMatrix, z: &DenseMatrix) -> Result<DenseMatrix> {
    let m = u.rows();
    if z.shape() != (m, m) {
        return Err(Error::dims(format!("z must be {m}x{m}")));
    }
    let asym = (z - &z.transpose()).norm();
    let scale = z.norm();
    if asym > 1e-10 * scale {
        return Err(Error::AsymmetricInput(asym / scale));
    }
    let u_pinv = pseudo_inverse(u)?;
    let mut d = z.matmul_t(&u_pinv);
    let half = u.matmul(&u_pinv.matmul(&d));
    d.axpy(-0.5, &half);
    Ok(d)
}

/// Step size guaranteeing descent and rank preservation:
/// `min{1, Lσ_min³/(2‖∇Φ‖), 3σ_min⁴/(32σ_max²‖Φ′‖)}` with the extremes taken
/// over both factors.
pub fn step_size_bound(x: &FactorPair, grad_norm: f64, phi_prime_norm: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidArgument(format!("lipschitz constant {l} must be positive")));
    }
    let (smin, smax) = x.singular_extremes()?;
    let dim = x.u.rows().max(x.v.rows()).max(x.rank());
    if !(smax > 0.0) || smin <= RANK_TOL * dim as f64 * smax {
        return Err(Error::RankDeficient { sigma_min: smin, sigma_max: smax });
    }
    let second = if grad_norm > 0.0 { l * smin.powi(3) / (2.0 * grad_norm) } else { f64::INFINITY };
    let third = if phi_prime_norm > 0.0 {
        3.0 * smin.powi(4) / (32.0 * smax * smax * phi_prime_norm)
    } else {
        f64::INFINITY
    };
    Ok(1f64.min(second).min(third))
}
