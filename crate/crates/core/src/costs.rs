//! The two objective functions, their gradients with respect to the
//! coefficient matrix, and the Euclidean Hessian.
//!
//! Gradients are provided for H only; the W-side gradients follow from
//! the transposition symmetry of the problem and are never duplicated
//! here. Divergence terms use the 0*log(0) = 0 convention, and a
//! positive data entry against a zero model entry is a hard error
//! rather than a clamp.

use serde::{Deserialize, Serialize};

use crate::error::{NmfError, Result};
use crate::matrix::{Matrix, NonNegMatrix};

/// Which objective a solver run minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostKind {
    /// Half squared Frobenius distance, 0.5 * ||V - WH||^2.
    Euclidean,
    /// Generalized KL divergence, sum of v*log(v/x) - v + x.
    GeneralizedKl,
}

fn check_triple(
    op: &'static str,
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
) -> Result<()> {
    if w.cols() != h.rows() {
        return Err(NmfError::shape(op, w.shape(), h.shape()));
    }
    if v.shape() != (w.rows(), h.cols()) {
        return Err(NmfError::shape(op, v.shape(), (w.rows(), h.cols())));
    }
    Ok(())
}

/// 0.5 * sum_ij (V_ij - (WH)_ij)^2.
pub fn euclidean_cost(v: &NonNegMatrix, w: &NonNegMatrix, h: &NonNegMatrix) -> Result<f64> {
    check_triple("euclidean_cost", v, w, h)?;
    let wh = w.matmul(h)?;
    let mut acc = 0.0;
    for (a, b) in v.data().iter().zip(wh.data()) {
        let d = a - b;
        acc += d * d;
    }
    Ok(0.5 * acc)
}

/// Generalized KL divergence between V and WH:
/// sum_ij V_ij*log(V_ij/(WH)_ij) - V_ij + (WH)_ij.
///
/// Zero data entries contribute only their (WH)_ij term; a positive
/// data entry where (WH)_ij == 0 is a domain error.
pub fn gkl_cost(v: &NonNegMatrix, w: &NonNegMatrix, h: &NonNegMatrix) -> Result<f64> {
    check_triple("gkl_cost", v, w, h)?;
    let wh = w.matmul(h)?;
    let cols = v.cols();
    let mut acc = 0.0;
    for (idx, (&a, &b)) in v.data().iter().zip(wh.data()).enumerate() {
        acc += gkl_term(a, b, idx / cols, idx % cols)?;
    }
    Ok(acc)
}

#[inline]
pub(crate) fn gkl_term(v: f64, model: f64, row: usize, col: usize) -> Result<f64> {
    if v > 0.0 {
        if model <= 0.0 {
            return Err(NmfError::ZeroModelValue { row, col });
        }
        Ok(v * (v / model).ln() - v + model)
    } else {
        Ok(model)
    }
}

/// Plain KL divergence sum_ij V_ij*log(V_ij/X_ij) without the linear
/// correction terms; may be negative.
pub fn kl_cost_standard(v: &NonNegMatrix, wh: &NonNegMatrix) -> Result<f64> {
    if v.shape() != wh.shape() {
        return Err(NmfError::shape("kl_cost_standard", v.shape(), wh.shape()));
    }
    let cols = v.cols();
    let mut acc = 0.0;
    for (idx, (&a, &b)) in v.data().iter().zip(wh.data()).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(NmfError::ZeroModelValue {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc)
}

/// Gradient of the Euclidean cost in H: W^T W H - W^T V, shape (r, m).
pub fn grad_h_euclidean(v: &NonNegMatrix, w: &NonNegMatrix, h: &NonNegMatrix) -> Result<Matrix> {
    check_triple("grad_h_euclidean", v, w, h)?;
    let wt = w.as_matrix().transpose();
    let wtwh = wt.matmul(w.as_matrix())?.matmul(h.as_matrix())?;
    let wtv = wt.matmul(v.as_matrix())?;
    wtwh.sub(&wtv)
}

/// Gradient of the generalized KL cost in H:
/// grad[a][mu] = sum_i W_ia - sum_i V_imu * W_ia / (WH)_imu.
pub fn grad_h_gkl(v: &NonNegMatrix, w: &NonNegMatrix, h: &NonNegMatrix) -> Result<Matrix> {
    check_triple("grad_h_gkl", v, w, h)?;
    let wh = w.matmul(h)?;
    let quotient = ratio_where_positive(v, &wh)?;
    let wt = w.as_matrix().transpose();
    let weighted = wt.matmul(&quotient)?;
    let col_sums = w.col_sums();
    Ok(Matrix::from_fn(h.rows(), h.cols(), |a, mu| {
        col_sums[a] - weighted.get(a, mu)
    }))
}

/// Elementwise V / X where V > 0, zero where V == 0; errors on a
/// positive entry against a zero model value.
pub(crate) fn ratio_where_positive(v: &NonNegMatrix, model: &Matrix) -> Result<Matrix> {
    debug_assert_eq!(v.shape(), model.shape());
    let cols = v.cols();
    let mut data = Vec::with_capacity(v.data().len());
    for (idx, (&a, &b)) in v.data().iter().zip(model.data()).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(NmfError::ZeroModelValue {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
            data.push(a / b);
        } else {
            data.push(0.0);
        }
    }
    Matrix::new(v.rows(), v.cols(), data)
}

/// Hessian of the Euclidean cost in any single column of H: W^T W.
/// Constant in both H and V.
pub fn hessian_h_euclidean(w: &NonNegMatrix) -> Matrix {
    let wt = w.as_matrix().transpose();
    wt.matmul(w.as_matrix()).expect("square product")
}

/// Dispatch on the configured cost kind.
pub fn cost_value(
    kind: CostKind,
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
) -> Result<f64> {
    match kind {
        CostKind::Euclidean => euclidean_cost(v, w, h),
        CostKind::GeneralizedKl => gkl_cost(v, w, h),
    }
}
