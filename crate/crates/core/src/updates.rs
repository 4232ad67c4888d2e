//! Multiplicative update rules for both cost functions, the adaptive
//! learning rates they correspond to, and the additive-step form used
//! to verify the equivalence.
//!
//! Each update rescales the current factor by a non-negative ratio, so
//! non-negativity is preserved by construction and exact zeros stay
//! exactly zero. The W-side rules are implemented by transposing the
//! H-side rules; direct evaluations exist alongside them so the two
//! routes can be cross-checked.

use crate::costs::ratio_where_positive;
use crate::error::{NmfError, Result};
use crate::matrix::{hadamard_ratio, Matrix, NonNegMatrix, DEFAULT_EPS};

/// The pair of factors evolved by a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub w: NonNegMatrix,
    pub h: NonNegMatrix,
}

impl Factorization {
    pub fn new(w: NonNegMatrix, h: NonNegMatrix) -> Result<Self> {
        if w.cols() != h.rows() {
            return Err(NmfError::shape("factorization", w.shape(), h.shape()));
        }
        Ok(Factorization { w, h })
    }

    pub fn rank(&self) -> usize {
        self.w.cols()
    }
}

fn check_update(
    op: &'static str,
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
) -> Result<()> {
    if eps <= 0.0 {
        return Err(NmfError::invalid("eps must be > 0"));
    }
    if w.cols() != h.rows() {
        return Err(NmfError::shape(op, w.shape(), h.shape()));
    }
    if v.shape() != (w.rows(), h.cols()) {
        return Err(NmfError::shape(op, v.shape(), (w.rows(), h.cols())));
    }
    Ok(())
}

/// Euclidean H-rule: H <- H .* (W^T V) ./ (W^T W H), denominator
/// floored at `eps`.
pub fn update_h_euclidean(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
) -> Result<NonNegMatrix> {
    update_h_euclidean_scaled(v, w, h, eps, 1.0)
}

/// Euclidean H-rule with the numerator multiplied by `numer_scale`.
///
/// A scale of 1.0 is the exact rule. Any other value produces a
/// deliberately wrong update; the verification suite uses this to
/// prove its own checks can fail.
#[doc(hidden)]
pub fn update_h_euclidean_scaled(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
    numer_scale: f64,
) -> Result<NonNegMatrix> {
    check_update("update_h_euclidean", v, w, h, eps)?;
    let wt = w.as_matrix().transpose();
    let mut num = wt.matmul(v.as_matrix())?;
    if numer_scale != 1.0 {
        num = num.map(|x| x * numer_scale);
    }
    let den = wt.matmul(w.as_matrix())?.matmul(h.as_matrix())?;
    let ratio = hadamard_ratio(
        &NonNegMatrix::from_matrix_unchecked(num),
        &NonNegMatrix::from_matrix_unchecked(den),
        eps,
    )?;
    let out = h.as_matrix().zip_map(ratio.as_matrix(), "update_h_euclidean", |a, b| a * b)?;
    Ok(NonNegMatrix::from_matrix_unchecked(out))
}

/// Euclidean W-rule, evaluated through the transposition relation:
/// updating W on (V, W, H) is updating H on (V^T, H^T, W^T).
pub fn update_w_euclidean(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
) -> Result<NonNegMatrix> {
    update_w_euclidean_scaled(v, w, h, eps, 1.0)
}

#[doc(hidden)]
pub fn update_w_euclidean_scaled(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
    numer_scale: f64,
) -> Result<NonNegMatrix> {
    check_update("update_w_euclidean", v, w, h, eps)?;
    let updated =
        update_h_euclidean_scaled(&v.transpose(), &h.transpose(), &w.transpose(), eps, numer_scale)?;
    Ok(updated.transpose())
}

/// Direct form of the Euclidean W-rule, W <- W .* (V H^T) ./ (W H H^T).
/// Kept for cross-checking the transposition route.
pub fn update_w_euclidean_direct(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
) -> Result<NonNegMatrix> {
    check_update("update_w_euclidean_direct", v, w, h, eps)?;
    let ht = h.as_matrix().transpose();
    let num = v.as_matrix().matmul(&ht)?;
    let den = w.as_matrix().matmul(h.as_matrix())?.matmul(&ht)?;
    let ratio = hadamard_ratio(
        &NonNegMatrix::from_matrix_unchecked(num),
        &NonNegMatrix::from_matrix_unchecked(den),
        eps,
    )?;
    let out = w
        .as_matrix()
        .zip_map(ratio.as_matrix(), "update_w_euclidean_direct", |a, b| a * b)?;
    Ok(NonNegMatrix::from_matrix_unchecked(out))
}

/// KL H-rule: H_amu <- H_amu * (sum_i W_ia V_imu / (WH)_imu) / (sum_k W_ka),
/// column sums floored at `eps`.
pub fn update_h_gkl(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
) -> Result<NonNegMatrix> {
    update_h_gkl_scaled(v, w, h, eps, 1.0)
}

#[doc(hidden)]
pub fn update_h_gkl_scaled(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
    numer_scale: f64,
) -> Result<NonNegMatrix> {
    check_update("update_h_gkl", v, w, h, eps)?;
    let wh = w.matmul(h.as_matrix())?;
    let quotient = ratio_where_positive(v, &wh)?;
    let wt = w.as_matrix().transpose();
    let mut num = wt.matmul(&quotient)?;
    if numer_scale != 1.0 {
        num = num.map(|x| x * numer_scale);
    }
    let col_sums = w.col_sums();
    let out = Matrix::from_fn(h.rows(), h.cols(), |a, mu| {
        h.get(a, mu) * num.get(a, mu) / col_sums[a].max(eps)
    });
    Ok(NonNegMatrix::from_matrix_unchecked(out))
}

/// KL W-rule through the transposition relation.
pub fn update_w_gkl(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
) -> Result<NonNegMatrix> {
    update_w_gkl_scaled(v, w, h, eps, 1.0)
}

#[doc(hidden)]
pub fn update_w_gkl_scaled(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
    numer_scale: f64,
) -> Result<NonNegMatrix> {
    check_update("update_w_gkl", v, w, h, eps)?;
    let updated = update_h_gkl_scaled(&v.transpose(), &h.transpose(), &w.transpose(), eps, numer_scale)?;
    Ok(updated.transpose())
}

/// Direct form of the KL W-rule:
/// W_ia <- W_ia * (sum_mu H_amu V_imu / (WH)_imu) / (sum_nu H_anu).
pub fn update_w_gkl_direct(
    v: &NonNegMatrix,
    w: &NonNegMatrix,
    h: &NonNegMatrix,
    eps: f64,
) -> Result<NonNegMatrix> {
    check_update("update_w_gkl_direct", v, w, h, eps)?;
    let wh = w.matmul(h.as_matrix())?;
    let quotient = ratio_where_positive(v, &wh)?;
    let num = quotient.matmul(&h.as_matrix().transpose())?;
    let row_sums = h.as_matrix().transpose().col_sums();
    let out = Matrix::from_fn(w.rows(), w.cols(), |i, a| {
        w.get(i, a) * num.get(i, a) / row_sums[a].max(eps)
    });
    Ok(NonNegMatrix::from_matrix_unchecked(out))
}

/// Adaptive learning rate for the Euclidean rule,
/// eta[a][mu] = H_amu / (W^T W H)_amu, floored at the default eps.
pub fn eta_euclidean(w: &NonNegMatrix, h: &NonNegMatrix) -> Result<NonNegMatrix> {
    if w.cols() != h.rows() {
        return Err(NmfError::shape("eta_euclidean", w.shape(), h.shape()));
    }
    let wt = w.as_matrix().transpose();
    let den = wt.matmul(w.as_matrix())?.matmul(h.as_matrix())?;
    let out = h
        .as_matrix()
        .zip_map(&den, "eta_euclidean", |num, d| num / d.max(DEFAULT_EPS))?;
    Ok(NonNegMatrix::from_matrix_unchecked(out))
}

/// Adaptive learning rate for the KL rule,
/// eta[a][mu] = H_amu / sum_i W_ia, floored at the default eps.
pub fn eta_gkl(w: &NonNegMatrix, h: &NonNegMatrix) -> Result<NonNegMatrix> {
    if w.cols() != h.rows() {
        return Err(NmfError::shape("eta_gkl", w.shape(), h.shape()));
    }
    let col_sums = w.col_sums();
    let out = Matrix::from_fn(h.rows(), h.cols(), |a, mu| {
        h.get(a, mu) / col_sums[a].max(DEFAULT_EPS)
    });
    Ok(NonNegMatrix::from_matrix_unchecked(out))
}

/// One additive gradient step, h - eta .* grad. The result may be
/// negative for an arbitrary rate matrix; callers decide what that
/// means.
pub fn additive_step(h: &NonNegMatrix, eta: &NonNegMatrix, grad: &Matrix) -> Result<Matrix> {
    if h.shape() != eta.shape() {
        return Err(NmfError::shape("additive_step", h.shape(), eta.shape()));
    }
    let scaled = eta.as_matrix().zip_map(grad, "additive_step", |e, g| e * g)?;
    h.as_matrix().sub(&scaled)
}
