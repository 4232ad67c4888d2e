//! Majorization-minimization machinery on the single-column problem.
//!
//! Everything here works on one coefficient vector h against a fixed
//! basis W and target v, mirroring how the convergence argument is
//! actually stated: an auxiliary function G(h, h_t) that touches F at
//! h_t and lies above F everywhere, whose closed-form minimizer is the
//! multiplicative update. The matrix-level rules are recovered by
//! embedding a column.

use crate::costs::{gkl_term, CostKind};
use crate::error::{NmfError, Result};
use crate::matrix::{Matrix, NonNegMatrix, DEFAULT_EPS};

/// Fixed data for the column problem: target v, basis W, and the
/// strictly positive anchor point h_t that both auxiliary functions
/// are built around.
#[derive(Debug, Clone)]
pub struct AuxContext {
    v: Vec<f64>,
    w: NonNegMatrix,
    ht: Vec<f64>,
}

impl AuxContext {
    /// Validates lengths, non-negativity of v and strict positivity of
    /// the anchor (both auxiliary forms divide by h_t or take its log).
    pub fn new(v: Vec<f64>, w: NonNegMatrix, ht: Vec<f64>) -> Result<Self> {
        if v.len() != w.rows() {
            return Err(NmfError::shape("aux_context", (v.len(), 1), w.shape()));
        }
        if ht.len() != w.cols() {
            return Err(NmfError::shape("aux_context", w.shape(), (ht.len(), 1)));
        }
        if let Some(bad) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(NmfError::invalid(format!(
                "target entry {bad} must be finite and >= 0"
            )));
        }
        if let Some(bad) = ht.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(NmfError::invalid(format!(
                "anchor entry {bad} must be strictly positive"
            )));
        }
        Ok(AuxContext { v, w, ht })
    }

    pub fn target(&self) -> &[f64] {
        &self.v
    }

    pub fn basis(&self) -> &NonNegMatrix {
        &self.w
    }

    pub fn anchor(&self) -> &[f64] {
        &self.ht
    }

    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    fn check_len(&self, op: &'static str, h: &[f64]) -> Result<()> {
        if h.len() != self.rank() {
            return Err(NmfError::shape(op, (h.len(), 1), (self.rank(), 1)));
        }
        Ok(())
    }
}

/// F(h) = 0.5 * sum_i (v_i - (W h)_i)^2.
pub fn f_euclidean(ctx: &AuxContext, h: &[f64]) -> Result<f64> {
    ctx.check_len("f_euclidean", h)?;
    let wh = ctx.w.matvec(h)?;
    Ok(0.5
        * ctx
            .v
            .iter()
            .zip(&wh)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>())
}

/// Diagonal curvature matrix K with K_aa = (W^T W h_t)_a / h_t_a.
pub fn k_matrix(ctx: &AuxContext) -> Matrix {
    let wtw = hessian(ctx);
    let wtwht = wtw.matvec(&ctx.ht).expect("square product");
    let r = ctx.rank();
    Matrix::from_fn(r, r, |a, b| if a == b { wtwht[a] / ctx.ht[a] } else { 0.0 })
}

fn hessian(ctx: &AuxContext) -> Matrix {
    let wt = ctx.w.as_matrix().transpose();
    wt.matmul(ctx.w.as_matrix()).expect("square product")
}

fn grad_f_euclidean_at_anchor(ctx: &AuxContext) -> Vec<f64> {
    let wtw = hessian(ctx);
    let wtwht = wtw.matvec(&ctx.ht).expect("square product");
    let wtv = ctx
        .w
        .as_matrix()
        .transpose()
        .matvec(&ctx.v)
        .expect("checked shape");
    wtwht.iter().zip(&wtv).map(|(&a, &b)| a - b).collect()
}

/// Quadratic auxiliary function for the Euclidean cost:
/// G(h, h_t) = F(h_t) + (h - h_t)^T grad F(h_t)
///           + 0.5 (h - h_t)^T K(h_t) (h - h_t).
pub fn g_euclidean(ctx: &AuxContext, h: &[f64]) -> Result<f64> {
    ctx.check_len("g_euclidean", h)?;
    let f_anchor = f_euclidean(ctx, &ctx.ht)?;
    let grad = grad_f_euclidean_at_anchor(ctx);
    let k = k_matrix(ctx);
    let mut linear = 0.0;
    let mut quad = 0.0;
    for a in 0..ctx.rank() {
        let d = h[a] - ctx.ht[a];
        linear += d * grad[a];
        quad += d * d * k.get(a, a);
    }
    Ok(f_anchor + linear + 0.5 * quad)
}

/// The two equivalent evaluations of the curvature-gap quadratic form.
#[derive(Debug, Clone, Copy)]
pub struct PsdGap {
    /// nu^T M nu with M_ab = h_t_a (K - W^T W)_ab h_t_b.
    pub quadratic_form: f64,
    /// 0.5 * sum_ab (nu_a - nu_b)^2 h_t_a h_t_b (W^T W)_ab.
    pub paired_difference: f64,
}

/// Evaluates nu^T M nu both as a direct quadratic form and as the
/// paired-difference sum it rearranges into. Both must agree and be
/// non-negative; returning both lets a test catch a transcription
/// error in either formula.
pub fn psd_gap(ctx: &AuxContext, nu: &[f64]) -> Result<PsdGap> {
    ctx.check_len("psd_gap", nu)?;
    let r = ctx.rank();
    let wtw = hessian(ctx);
    let k = k_matrix(ctx);

    let mut quadratic_form = 0.0;
    for a in 0..r {
        for b in 0..r {
            let gap_ab = if a == b { k.get(a, a) } else { 0.0 } - wtw.get(a, b);
            quadratic_form += nu[a] * ctx.ht[a] * gap_ab * ctx.ht[b] * nu[b];
        }
    }

    let mut paired_difference = 0.0;
    for a in 0..r {
        for b in 0..r {
            let d = nu[a] - nu[b];
            paired_difference += 0.5 * d * d * ctx.ht[a] * ctx.ht[b] * wtw.get(a, b);
        }
    }

    Ok(PsdGap {
        quadratic_form,
        paired_difference,
    })
}

/// Closed-form minimizer of the quadratic auxiliary function:
/// h_a = h_t_a * (W^T v)_a / (W^T W h_t)_a, denominators floored.
pub fn mm_argmin_euclidean(ctx: &AuxContext) -> Vec<f64> {
    let wt = ctx.w.as_matrix().transpose();
    let num = wt.matvec(&ctx.v).expect("checked shape");
    let den = hessian(ctx).matvec(&ctx.ht).expect("square product");
    (0..ctx.rank())
        .map(|a| ctx.ht[a] * num[a] / den[a].max(DEFAULT_EPS))
        .collect()
}

/// F(h) = sum_i [v_i log(v_i / (W h)_i) - v_i + (W h)_i].
pub fn f_gkl(ctx: &AuxContext, h: &[f64]) -> Result<f64> {
    ctx.check_len("f_gkl", h)?;
    let wh = ctx.w.matvec(h)?;
    let mut acc = 0.0;
    for (i, (&vi, &mi)) in ctx.v.iter().zip(&wh).enumerate() {
        acc += gkl_term(vi, mi, i, 0)?;
    }
    Ok(acc)
}

/// Jensen-based auxiliary function for the KL cost. Terms with zero
/// weight are dropped; a nonpositive log argument under a positive
/// weight is a domain error.
pub fn g_gkl(ctx: &AuxContext, h: &[f64]) -> Result<f64> {
    ctx.check_len("g_gkl", h)?;
    let w = &ctx.w;
    let s = w.matvec(&ctx.ht)?;

    let mut acc = 0.0;
    // sum_i (v_i log v_i - v_i), with 0 log 0 = 0.
    for &vi in &ctx.v {
        if vi > 0.0 {
            acc += vi * vi.ln() - vi;
        }
    }
    // sum_ia W_ia h_a
    let col_sums = w.col_sums();
    for (a, &ha) in h.iter().enumerate() {
        acc += col_sums[a] * ha;
    }
    // -sum_ia v_i alpha_ia (log(W_ia h_a) - log alpha_ia)
    for i in 0..w.rows() {
        let vi = ctx.v[i];
        if vi == 0.0 {
            continue;
        }
        if s[i] <= 0.0 {
            return Err(NmfError::ZeroModelValue { row: i, col: 0 });
        }
        for a in 0..ctx.rank() {
            let wia = w.get(i, a);
            if wia == 0.0 {
                continue;
            }
            let alpha = wia * ctx.ht[a] / s[i];
            let arg = wia * h[a];
            if arg <= 0.0 {
                return Err(NmfError::invalid(format!(
                    "auxiliary log argument at row {i}, component {a} must be positive"
                )));
            }
            acc -= vi * alpha * (arg.ln() - alpha.ln());
        }
    }
    Ok(acc)
}

/// Convex-combination weights for row i:
/// alpha_a = W_ia h_t_a / sum_b W_ib h_t_b.
pub fn jensen_weights(ctx: &AuxContext, i: usize) -> Result<Vec<f64>> {
    if i >= ctx.w.rows() {
        return Err(NmfError::invalid(format!(
            "row index {i} out of range for {} rows",
            ctx.w.rows()
        )));
    }
    let mut s = 0.0;
    for a in 0..ctx.rank() {
        s += ctx.w.get(i, a) * ctx.ht[a];
    }
    if s <= 0.0 {
        return Err(NmfError::degenerate(format!("row {i} of the basis is all zeros")));
    }
    Ok((0..ctx.rank())
        .map(|a| ctx.w.get(i, a) * ctx.ht[a] / s)
        .collect())
}

/// Closed-form minimizer of the Jensen auxiliary function:
/// h_a = h_t_a * sum_i (W_ia v_i / (W h_t)_i) / sum_i W_ia.
pub fn mm_argmin_gkl(ctx: &AuxContext) -> Result<Vec<f64>> {
    let s = ctx.w.matvec(&ctx.ht)?;
    let mut weighted = vec![0.0; ctx.v.len()];
    for (i, &vi) in ctx.v.iter().enumerate() {
        if vi > 0.0 {
            if s[i] <= 0.0 {
                return Err(NmfError::ZeroModelValue { row: i, col: 0 });
            }
            weighted[i] = vi / s[i];
        }
    }
    let num = ctx.w.as_matrix().transpose().matvec(&weighted)?;
    let col_sums = ctx.w.col_sums();
    Ok((0..ctx.rank())
        .map(|a| ctx.ht[a] * num[a] / col_sums[a].max(DEFAULT_EPS))
        .collect())
}

/// One majorization-minimization step: minimize the auxiliary function
/// anchored at h_t. In debug builds the descent chain
/// F(next) <= G(next, h_t) <= G(h_t, h_t) <= F(h_t) is re-evaluated
/// and asserted.
pub fn mm_step(ctx: &AuxContext, kind: CostKind) -> Result<Vec<f64>> {
    let next = match kind {
        CostKind::Euclidean => mm_argmin_euclidean(ctx),
        CostKind::GeneralizedKl => mm_argmin_gkl(ctx)?,
    };
    #[cfg(debug_assertions)]
    {
        let (f_next, g_next, g_anchor, f_anchor) = match kind {
            CostKind::Euclidean => (
                f_euclidean(ctx, &next)?,
                g_euclidean(ctx, &next)?,
                g_euclidean(ctx, ctx.anchor())?,
                f_euclidean(ctx, ctx.anchor())?,
            ),
            CostKind::GeneralizedKl => (
                f_gkl(ctx, &next)?,
                g_gkl(ctx, &next)?,
                g_gkl(ctx, ctx.anchor())?,
                f_gkl(ctx, ctx.anchor())?,
            ),
        };
        let slack = 1e-12 * (1.0 + f_anchor.abs());
        debug_assert!(
            f_next <= g_next + slack && g_next <= g_anchor + slack && g_anchor <= f_anchor + slack,
            "descent chain violated: F(next)={f_next}, G(next)={g_next}, G(anchor)={g_anchor}, F(anchor)={f_anchor}"
        );
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(v: &[f64], w_rows: &[Vec<f64>], ht: &[f64]) -> AuxContext {
        AuxContext::new(
            v.to_vec(),
            NonNegMatrix::from_rows(w_rows).unwrap(),
            ht.to_vec(),
        )
        .unwrap()
    }

    fn sample_ctx() -> AuxContext {
        ctx(
            &[1.3, 0.4, 2.0, 0.9],
            &[
                vec![0.8, 0.3, 1.1],
                vec![0.2, 1.4, 0.5],
                vec![1.0, 0.6, 0.9],
                vec![0.4, 0.7, 1.2],
            ],
            &[0.9, 1.1, 0.5],
        )
    }

    #[test]
    fn f_euclidean_values() {
        let c = ctx(&[1.0], &[vec![0.5]], &[1.0]);
        assert_eq!(f_euclidean(&c, &[1.0]).unwrap(), 0.125);

        // Zero at an exact image point.
        let c = sample_ctx();
        let h = [0.7, 0.4, 1.2];
        let image = c.basis().matvec(&h).unwrap();
        let c2 = AuxContext::new(image, c.basis().clone(), c.anchor().to_vec()).unwrap();
        assert!(f_euclidean(&c2, &h).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn f_matches_matrix_costs_on_column_embedding() {
        let c = sample_ctx();
        let h = [0.7, 0.4, 1.2];
        let v_col = NonNegMatrix::new(4, 1, c.target().to_vec()).unwrap();
        let h_col = NonNegMatrix::new(3, 1, h.to_vec()).unwrap();
        let f = f_euclidean(&c, &h).unwrap();
        let cost = crate::costs::euclidean_cost(&v_col, c.basis(), &h_col).unwrap();
        assert!((f - cost).abs() <= 1e-14 * (1.0 + cost));

        let f = f_gkl(&c, &h).unwrap();
        let cost = crate::costs::gkl_cost(&v_col, c.basis(), &h_col).unwrap();
        assert!((f - cost).abs() <= 1e-14 * (1.0 + cost.abs()));
    }

    #[test]
    fn k_matrix_hand_values() {
        let c = ctx(&[1.0, 1.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0]);
        assert_eq!(k_matrix(&c), Matrix::identity(2));

        let c = ctx(&[1.0, 1.0], &[vec![1.0, 2.0], vec![3.0, 4.0]], &[1.0, 1.0]);
        let k = k_matrix(&c);
        assert_eq!(k.get(0, 0), 24.0);
        assert_eq!(k.get(1, 1), 34.0);
        assert_eq!(k.get(0, 1), 0.0);
        assert_eq!(k.get(1, 0), 0.0);
    }

    #[test]
    fn k_dominates_hessian_diagonal() {
        let c = sample_ctx();
        let k = k_matrix(&c);
        let wtw = c
            .basis()
            .as_matrix()
            .transpose()
            .matmul(c.basis().as_matrix())
            .unwrap();
        for a in 0..c.rank() {
            assert!(k.get(a, a) >= wtw.get(a, a) - 1e-15);
        }
    }

    #[test]
    fn g_euclidean_touches_f_at_anchor() {
        let c = sample_ctx();
        let g = g_euclidean(&c, c.anchor()).unwrap();
        let f = f_euclidean(&c, c.anchor()).unwrap();
        assert_eq!(g, f);
    }

    #[test]
    fn g_equals_f_everywhere_for_identity_basis() {
        let c = ctx(&[0.7, 1.9], &[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.6, 1.4]);
        for h in [[0.1, 0.2], [1.0, 1.0], [2.5, 0.3]] {
            let g = g_euclidean(&c, &h).unwrap();
            let f = f_euclidean(&c, &h).unwrap();
            assert!((g - f).abs() <= 1e-14 * (1.0 + f));
        }
    }

    #[test]
    fn psd_gap_zero_cases_and_agreement() {
        let c = sample_ctx();
        let zero = psd_gap(&c, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(zero.quadratic_form, 0.0);
        assert_eq!(zero.paired_difference, 0.0);

        let constant = psd_gap(&c, &[2.5, 2.5, 2.5]).unwrap();
        assert!(constant.paired_difference == 0.0);
        assert!(constant.quadratic_form.abs() <= 1e-12);

        let gap = psd_gap(&c, &[0.3, -1.2, 0.8]).unwrap();
        assert!(gap.quadratic_form >= -1e-12);
        assert!(
            (gap.quadratic_form - gap.paired_difference).abs()
                <= 1e-10 * (1.0 + gap.paired_difference.abs())
        );
    }

    #[test]
    fn argmin_euclidean_fixed_point_and_scalar() {
        let c = sample_ctx();
        let image = c.basis().matvec(c.anchor()).unwrap();
        let fixed = AuxContext::new(image, c.basis().clone(), c.anchor().to_vec()).unwrap();
        let next = mm_argmin_euclidean(&fixed);
        for (a, b) in next.iter().zip(fixed.anchor()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }

        let scalar = ctx(&[2.0], &[vec![1.0]], &[1.0]);
        assert_eq!(mm_argmin_euclidean(&scalar), vec![2.0]);
    }

    #[test]
    fn argmin_gkl_fixed_point_and_scalar() {
        let c = sample_ctx();
        let image = c.basis().matvec(c.anchor()).unwrap();
        let fixed = AuxContext::new(image, c.basis().clone(), c.anchor().to_vec()).unwrap();
        let next = mm_argmin_gkl(&fixed).unwrap();
        for (a, b) in next.iter().zip(fixed.anchor()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }

        let scalar = ctx(&[2.0], &[vec![1.0]], &[1.0]);
        assert_eq!(mm_argmin_gkl(&scalar).unwrap(), vec![2.0]);
    }

    #[test]
    fn f_gkl_known_value() {
        let c = ctx(&[1.0], &[vec![4.0]], &[1.0]);
        let f = f_gkl(&c, &[1.0]).unwrap();
        assert!((f - (3.0 - 4.0_f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn g_gkl_touches_f_at_anchor() {
        let c = sample_ctx();
        let g = g_gkl(&c, c.anchor()).unwrap();
        let f = f_gkl(&c, c.anchor()).unwrap();
        assert!((g - f).abs() <= 1e-12 * (1.0 + f.abs()));
    }

    #[test]
    fn g_gkl_zero_target_reduces_to_linear_term() {
        let c = ctx(
            &[0.0, 0.0],
            &[vec![0.8, 0.3], vec![0.2, 1.4]],
            &[0.9, 1.1],
        );
        let h = [0.5, 2.0];
        let g = g_gkl(&c, &h).unwrap();
        let linear = (0.8 + 0.2) * 0.5 + (0.3 + 1.4) * 2.0;
        assert!((g - linear).abs() <= 1e-15);
    }

    #[test]
    fn jensen_weights_basics() {
        let single = ctx(&[1.0], &[vec![0.7]], &[2.0]);
        assert_eq!(jensen_weights(&single, 0).unwrap(), vec![1.0]);

        let sym = ctx(&[1.0], &[vec![1.0, 1.0]], &[1.0, 1.0]);
        assert_eq!(jensen_weights(&sym, 0).unwrap(), vec![0.5, 0.5]);

        let c = sample_ctx();
        for i in 0..4 {
            let alpha = jensen_weights(&c, i).unwrap();
            assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
        }
    }

    #[test]
    fn jensen_weights_degenerate_row_is_error() {
        let c = ctx(
            &[1.0, 1.0],
            &[vec![0.0, 0.0], vec![1.0, 1.0]],
            &[1.0, 1.0],
        );
        assert!(matches!(
            jensen_weights(&c, 0),
            Err(NmfError::DegenerateInput { .. })
        ));
    }

    #[test]
    fn mm_step_descends_over_consecutive_iterations() {
        for kind in [CostKind::Euclidean, CostKind::GeneralizedKl] {
            let mut anchor = vec![0.9, 1.1, 0.5];
            let base = sample_ctx();
            let mut costs = Vec::new();
            for _ in 0..10 {
                let c = AuxContext::new(base.target().to_vec(), base.basis().clone(), anchor)
                    .unwrap();
                let f = match kind {
                    CostKind::Euclidean => f_euclidean(&c, c.anchor()).unwrap(),
                    CostKind::GeneralizedKl => f_gkl(&c, c.anchor()).unwrap(),
                };
                costs.push(f);
                anchor = mm_step(&c, kind).unwrap();
            }
            for pair in costs.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12 * (1.0 + pair[0].abs()));
            }
        }
    }
}
