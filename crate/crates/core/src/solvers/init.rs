use crate::direction::FactorPair;
use crate::error::Result;
use crate::linalg::{dot, norm2, truncated_svd, DenseMatrix};
use crate::objectives::Problem;
use crate::operators::LinearOperator;

const CG_MAX_ITERS: usize = 1000;
const CG_TOL: f64 = 1e-10;

/// Spectral starting point: the rank-`r` truncated SVD of a preimage `M` of
/// `B`, split evenly as `U₀ = U_f Σ^{1/2}`, `V₀ = V_f Σ^{1/2}`.
pub fn init_point(prob: &Problem) -> Result<FactorPair> {
    let m = least_norm_preimage(prob.op(), prob.b())?;
    let svd = truncated_svd(&m, prob.rank())?;
    let roots: Vec<f64> = svd.sigma.iter().map(|s| s.sqrt()).collect();
    let scale = |f: &DenseMatrix| DenseMatrix::from_fn(f.rows(), f.cols(), |i, j| f[(i, j)] * roots[j]);
    FactorPair::new(scale(&svd.u), scale(&svd.v))
}

/// A matrix `M` with `A(M) ≈ B`.
///
/// Coordinate maps use `A*(B)` directly. Other operators use conjugate
/// gradients: on `AA* y = B` (then `M = A*y`, the least-norm solution) when
/// `l ≤ mn`, otherwise on the normal equations `A*A M = A*B`.
pub fn least_norm_preimage(op: &LinearOperator, b: &[f64]) -> Result<DenseMatrix> {
    if op.is_coordinate() {
        return op.adjoint(b);
    }
    let (m, n) = (op.in_rows(), op.in_cols());
    if op.out_len() <= m * n {
        let y = conjugate_gradient(b, |p| op.apply(&op.adjoint(p)?))?;
        op.adjoint(&y)
    } else {
        let rhs = op.adjoint(b)?.to_col_major();
        let x = conjugate_gradient(&rhs, |p| {
            Ok(op.adjoint(&op.apply(&DenseMatrix::from_col_major(m, n, p))?)?.to_col_major())
        })?;
        Ok(DenseMatrix::from_col_major(m, n, &x))
    }
}

/// Plain CG for a symmetric positive semidefinite map; returns the last
/// iterate when the budget runs out.
fn conjugate_gradient(rhs: &[f64], apply: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let mut x = vec![0.0; rhs.len()];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = CG_TOL * norm2(rhs);
    for _ in 0..CG_MAX_ITERS {
        if rr.sqrt() <= stop {
            break;
        }
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let a = rr / pap;
        for i in 0..x.len() {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr_next = dot(&r, &r);
        let b = rr_next / rr;
        rr = rr_next;
        for i in 0..p.len() {
            p[i] = r[i] + b * p[i];
        }
    }
    Ok(x)
}
