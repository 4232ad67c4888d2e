//! Self-contained numerical verification battery.
//!
//! Every analytic claim the library relies on is re-checked here at
//! runtime against an independent route: gradients against central
//! finite differences, update rules against cost evaluations before
//! and after, closed-form minimizers against the auxiliary functions
//! they minimize, and the counterexample gaps against their known
//! values. The suite is deterministic for a fixed seed and reports one
//! named result per check.
//!
//! `numerator_scale` deliberately corrupts the update rules (the exact
//! rules correspond to 1.0). Running the suite with a scale such as
//! 1.01 must make at least one check fail; this proves the checks are
//! able to reject a wrong implementation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;

use crate::auxiliary::{
    f_euclidean, f_gkl, g_euclidean, g_gkl, jensen_weights, k_matrix, mm_argmin_euclidean,
    mm_argmin_gkl, psd_gap, AuxContext,
};
use crate::convexity::{
    euclid_scalar_counterexample, euclid_vector_counterexample, gkl_scalar_derivative,
    kl_scalar_counterexample, kl_vector_counterexample, landscape_sample,
    matrix_nonconvexity_witness,
};
use crate::costs::{cost_value, grad_h_euclidean, grad_h_gkl, hessian_h_euclidean, CostKind};
use crate::error::Result;
use crate::matrix::{Matrix, NonNegMatrix, DEFAULT_EPS};
use crate::updates::{
    additive_step, eta_euclidean, eta_gkl, update_h_euclidean, update_h_euclidean_scaled,
    update_h_gkl, update_h_gkl_scaled, update_w_euclidean_direct, update_w_euclidean_scaled,
    update_w_gkl_direct, update_w_gkl_scaled,
};

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// 1.0 runs the exact update rules; anything else corrupts their
    /// numerators to demonstrate the checks can fail.
    pub numerator_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            numerator_scale: 1.0,
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation observed, in the units of `tolerance`.
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

impl CheckResult {
    fn from_measure(
        name: &'static str,
        max_error: f64,
        tolerance: f64,
        cases: usize,
        detail: impl Into<String>,
    ) -> Self {
        CheckResult {
            name,
            passed: max_error <= tolerance,
            max_error,
            tolerance,
            cases,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub numerator_scale: f64,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Runs the whole battery. Never returns an error: failures are
/// recorded in the report, and internal evaluation errors mark the
/// affected check as failed.
pub fn run_verify_suite(opts: &VerifyOptions) -> VerifyReport {
    let scale = opts.numerator_scale;
    let checks: Vec<Box<dyn Fn(&mut ChaCha8Rng) -> Result<CheckResult>>> = vec![
        Box::new(|rng| gradient_fd_check(rng, CostKind::Euclidean)),
        Box::new(|rng| gradient_fd_check(rng, CostKind::GeneralizedKl)),
        Box::new(hessian_fd_check),
        Box::new(move |rng| monotonicity_check(rng, CostKind::Euclidean, scale)),
        Box::new(move |rng| monotonicity_check(rng, CostKind::GeneralizedKl, scale)),
        Box::new(move |rng| fixed_point_invariance_check(rng, scale)),
        Box::new(fixed_point_stationarity_check),
        Box::new(auxiliary_touch_check),
        Box::new(auxiliary_majorization_check),
        Box::new(mm_chain_check),
        Box::new(|rng| argmin_agreement_check(rng, CostKind::Euclidean)),
        Box::new(|rng| argmin_agreement_check(rng, CostKind::GeneralizedKl)),
        Box::new(psd_gap_check),
        Box::new(curvature_dominance_check),
        Box::new(jensen_weight_check),
        Box::new(adaptive_rate_check),
        Box::new(counterexample_check),
        Box::new(landscape_check),
        Box::new(transposition_check),
        Box::new(zero_absorption_check),
    ];

    let mut results = Vec::with_capacity(checks.len());
    for (i, check) in checks.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(
            opts.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let result = check(&mut rng).unwrap_or_else(|err| CheckResult {
            name: "internal_evaluation",
            passed: false,
            max_error: f64::INFINITY,
            tolerance: 0.0,
            cases: 0,
            detail: format!("evaluation error: {err}"),
        });
        results.push(result);
    }

    let all_passed = results.iter().all(|c| c.passed);
    VerifyReport {
        seed: opts.seed,
        numerator_scale: opts.numerator_scale,
        checks: results,
        all_passed,
    }
}

// ---- sampling helpers -------------------------------------------------

fn sample_nonneg(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> NonNegMatrix {
    NonNegMatrix::from_matrix_unchecked(Matrix::from_fn(rows, cols, |_, _| {
        rng.random_range(lo..=hi)
    }))
}

fn sample_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..=hi)).collect()
}

fn sample_instance(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_m: usize,
    max_r: usize,
    lo: f64,
    hi: f64,
) -> (NonNegMatrix, NonNegMatrix, NonNegMatrix) {
    let n = rng.random_range(2..=max_n);
    let m = rng.random_range(2..=max_m);
    let r = rng.random_range(1..=max_r);
    (
        sample_nonneg(rng, n, m, lo, hi),
        sample_nonneg(rng, n, r, lo, hi),
        sample_nonneg(rng, r, m, lo, hi),
    )
}

fn sample_aux(rng: &mut ChaCha8Rng) -> AuxContext {
    let n = rng.random_range(2..=6);
    let r = rng.random_range(1..=6);
    AuxContext::new(
        sample_vec(rng, n, 0.1, 2.0),
        sample_nonneg(rng, n, r, 0.1, 2.0),
        sample_vec(rng, r, 0.1, 2.0),
    )
    .expect("sampled context is valid")
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-8)
}

// ---- finite differences ------------------------------------------------

/// Central difference with the step 1e-6 * (1 + |x_i|).
fn central_diff(f: &dyn Fn(&[f64]) -> Result<f64>, point: &[f64], i: usize) -> Result<f64> {
    let step = 1e-6 * (1.0 + point[i].abs());
    let mut p = point.to_vec();
    p[i] = point[i] + step;
    let plus = f(&p)?;
    p[i] = point[i] - step;
    let minus = f(&p)?;
    Ok((plus - minus) / (2.0 * step))
}

fn gradient_fd_check(rng: &mut ChaCha8Rng, kind: CostKind) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let (v, w, h) = sample_instance(rng, 6, 6, 3, 0.2, 1.2);
        let analytic = match kind {
            CostKind::Euclidean => grad_h_euclidean(&v, &w, &h)?,
            CostKind::GeneralizedKl => grad_h_gkl(&v, &w, &h)?,
        };
        let flat: Vec<f64> = h.data().to_vec();
        let cost_of = |hv: &[f64]| -> Result<f64> {
            let hm = NonNegMatrix::new(h.rows(), h.cols(), hv.to_vec())?;
            cost_value(kind, &v, &w, &hm)
        };
        for idx in 0..flat.len() {
            let fd = central_diff(&cost_of, &flat, idx)?;
            let a = analytic.get(idx / h.cols(), idx % h.cols());
            max_error = max_error.max((fd - a).abs() / a.abs().max(1e-8));
        }
    }
    Ok(CheckResult::from_measure(
        match kind {
            CostKind::Euclidean => "gradient_euclidean_finite_difference",
            CostKind::GeneralizedKl => "gradient_gkl_finite_difference",
        },
        max_error,
        1e-5,
        cases,
        "analytic coefficient gradient vs central finite differences of the cost",
    ))
}

fn hessian_fd_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 20;
    for _ in 0..cases {
        let n = rng.random_range(2..=6);
        let r = rng.random_range(1..=3);
        let w = sample_nonneg(rng, n, r, 0.2, 1.2);
        let v = sample_vec(rng, n, 0.2, 1.2);
        let h = sample_vec(rng, r, 0.2, 1.2);
        let analytic = hessian_h_euclidean(&w);

        let f = |hv: &[f64]| -> Result<f64> {
            let ctx = AuxContext::new(v.clone(), w.clone(), vec![1.0; r])?;
            f_euclidean(&ctx, hv)
        };
        for p in 0..r {
            for q in 0..r {
                let sp = 1e-4 * (1.0 + h[p].abs());
                let sq = 1e-4 * (1.0 + h[q].abs());
                let at = |dp: f64, dq: f64| -> Result<f64> {
                    let mut x = h.clone();
                    x[p] += dp;
                    x[q] += dq;
                    f(&x)
                };
                let fd = (at(sp, sq)? - at(sp, -sq)? - at(-sp, sq)? + at(-sp, -sq)?)
                    / (4.0 * sp * sq);
                max_error = max_error.max((fd - analytic.get(p, q)).abs());
            }
        }
    }
    Ok(CheckResult::from_measure(
        "hessian_euclidean_finite_difference",
        max_error,
        1e-4,
        cases,
        "constant curvature matrix vs second-order finite differences",
    ))
}

// ---- update rule checks -----------------------------------------------

fn monotonicity_check(rng: &mut ChaCha8Rng, kind: CostKind, scale: f64) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 50;
    for _ in 0..cases {
        let (v, mut w, mut h) = sample_instance(rng, 10, 10, 4, 0.05, 1.0);
        let mut prev = cost_value(kind, &v, &w, &h)?;
        for _ in 0..10 {
            h = match kind {
                CostKind::Euclidean => update_h_euclidean_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
                CostKind::GeneralizedKl => update_h_gkl_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
            };
            let mid = cost_value(kind, &v, &w, &h)?;
            max_error = max_error.max((mid - prev) / (1.0 + prev.abs()));

            w = match kind {
                CostKind::Euclidean => update_w_euclidean_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
                CostKind::GeneralizedKl => update_w_gkl_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
            };
            let after = cost_value(kind, &v, &w, &h)?;
            max_error = max_error.max((after - mid) / (1.0 + mid.abs()));
            prev = after;
        }
    }
    Ok(CheckResult::from_measure(
        match kind {
            CostKind::Euclidean => "monotonicity_euclidean_half_steps",
            CostKind::GeneralizedKl => "monotonicity_gkl_half_steps",
        },
        max_error.max(0.0),
        1e-12,
        cases,
        "cost evaluated before and after every half-step must not increase",
    ))
}

fn exact_factorization(
    rng: &mut ChaCha8Rng,
) -> Result<(NonNegMatrix, NonNegMatrix, NonNegMatrix)> {
    let n = rng.random_range(2..=8);
    let m = rng.random_range(2..=8);
    let r = rng.random_range(1..=3);
    let w = sample_nonneg(rng, n, r, 0.1, 1.0);
    let h = sample_nonneg(rng, r, m, 0.1, 1.0);
    let v = NonNegMatrix::from_matrix(w.matmul(&h)?)?;
    Ok((v, w, h))
}

fn fixed_point_invariance_check(rng: &mut ChaCha8Rng, scale: f64) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 20;
    for _ in 0..cases {
        let (v, w, h) = exact_factorization(rng)?;
        for updated in [
            update_h_euclidean_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
            update_h_gkl_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
        ] {
            for (a, b) in updated.data().iter().zip(h.data()) {
                max_error = max_error.max((a - b).abs() / b.abs().max(1e-8));
            }
        }
        for updated in [
            update_w_euclidean_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
            update_w_gkl_scaled(&v, &w, &h, DEFAULT_EPS, scale)?,
        ] {
            for (a, b) in updated.data().iter().zip(w.data()) {
                max_error = max_error.max((a - b).abs() / b.abs().max(1e-8));
            }
        }
    }
    Ok(CheckResult::from_measure(
        "fixed_point_invariance",
        max_error,
        1e-12,
        cases,
        "updates leave an exact factorization unchanged",
    ))
}

fn fixed_point_stationarity_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 20;
    for _ in 0..cases {
        let (v, w, h) = exact_factorization(rng)?;
        max_error = max_error.max(grad_h_euclidean(&v, &w, &h)?.max_abs());
        max_error = max_error.max(grad_h_gkl(&v, &w, &h)?.max_abs());
        // W-side gradients through the transposed problem.
        let (vt, wt, ht) = (v.transpose(), w.transpose(), h.transpose());
        max_error = max_error.max(grad_h_euclidean(&vt, &ht, &wt)?.max_abs());
        max_error = max_error.max(grad_h_gkl(&vt, &ht, &wt)?.max_abs());
    }
    Ok(CheckResult::from_measure(
        "fixed_point_stationarity",
        max_error,
        1e-9,
        cases,
        "gradients vanish wherever the updates are invariant",
    ))
}

// ---- auxiliary function checks ------------------------------------------

fn auxiliary_touch_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 1000;
    for _ in 0..cases {
        let ctx = sample_aux(rng);
        let h = sample_vec(rng, ctx.rank(), 0.1, 2.0);
        let same = AuxContext::new(
            ctx.target().to_vec(),
            ctx.basis().clone(),
            h.clone(),
        )?;
        max_error = max_error.max((g_euclidean(&same, &h)? - f_euclidean(&same, &h)?).abs());
        max_error = max_error.max((g_gkl(&same, &h)? - f_gkl(&same, &h)?).abs());
    }
    Ok(CheckResult::from_measure(
        "auxiliary_touches_cost_at_anchor",
        max_error,
        1e-10,
        cases,
        "G(h, h) equals F(h) for both auxiliary forms",
    ))
}

fn auxiliary_majorization_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 1000;
    for _ in 0..cases {
        let ctx = sample_aux(rng);
        let h = sample_vec(rng, ctx.rank(), 0.1, 2.0);
        max_error = max_error.max(f_euclidean(&ctx, &h)? - g_euclidean(&ctx, &h)?);
        max_error = max_error.max(f_gkl(&ctx, &h)? - g_gkl(&ctx, &h)?);
    }
    Ok(CheckResult::from_measure(
        "auxiliary_majorizes_cost",
        max_error.max(0.0),
        1e-12,
        cases,
        "G(h, h_t) >= F(h) on random strictly positive pairs",
    ))
}

fn mm_chain_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 200;
    for _ in 0..cases {
        for kind in [CostKind::Euclidean, CostKind::GeneralizedKl] {
            let ctx = sample_aux(rng);
            let next = match kind {
                CostKind::Euclidean => mm_argmin_euclidean(&ctx),
                CostKind::GeneralizedKl => mm_argmin_gkl(&ctx)?,
            };
            let (f_next, g_next, g_anchor, f_anchor) = match kind {
                CostKind::Euclidean => (
                    f_euclidean(&ctx, &next)?,
                    g_euclidean(&ctx, &next)?,
                    g_euclidean(&ctx, ctx.anchor())?,
                    f_euclidean(&ctx, ctx.anchor())?,
                ),
                CostKind::GeneralizedKl => (
                    f_gkl(&ctx, &next)?,
                    g_gkl(&ctx, &next)?,
                    g_gkl(&ctx, ctx.anchor())?,
                    f_gkl(&ctx, ctx.anchor())?,
                ),
            };
            max_error = max_error.max(f_next - g_next);
            max_error = max_error.max(g_next - g_anchor);
            max_error = max_error.max(g_anchor - f_anchor);
        }
    }
    Ok(CheckResult::from_measure(
        "mm_descent_chain",
        max_error.max(0.0),
        1e-12,
        cases,
        "F(next) <= G(next, anchor) <= G(anchor, anchor) <= F(anchor)",
    ))
}

fn argmin_agreement_check(rng: &mut ChaCha8Rng, kind: CostKind) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 200;
    for _ in 0..cases {
        let ctx = sample_aux(rng);
        let argmin = match kind {
            CostKind::Euclidean => mm_argmin_euclidean(&ctx),
            CostKind::GeneralizedKl => mm_argmin_gkl(&ctx)?,
        };
        let v_col = NonNegMatrix::new(ctx.basis().rows(), 1, ctx.target().to_vec())?;
        let h_col = NonNegMatrix::new(ctx.rank(), 1, ctx.anchor().to_vec())?;
        let updated = match kind {
            CostKind::Euclidean => update_h_euclidean(&v_col, ctx.basis(), &h_col, DEFAULT_EPS)?,
            CostKind::GeneralizedKl => update_h_gkl(&v_col, ctx.basis(), &h_col, DEFAULT_EPS)?,
        };
        for (a, b) in argmin.iter().zip(updated.data()) {
            max_error = max_error.max(rel_err(*a, *b));
        }
    }
    Ok(CheckResult::from_measure(
        match kind {
            CostKind::Euclidean => "argmin_matches_euclidean_update",
            CostKind::GeneralizedKl => "argmin_matches_gkl_update",
        },
        max_error,
        1e-12,
        cases,
        "closed-form auxiliary minimizer equals the multiplicative update on a column",
    ))
}

fn psd_gap_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 200;
    for _ in 0..cases {
        let ctx = sample_aux(rng);
        let nu = sample_vec(rng, ctx.rank(), -2.0, 2.0);
        let gap = psd_gap(&ctx, &nu)?;
        // The direct form cancels almost completely near constant nu,
        // so agreement and non-negativity are measured relative to the
        // magnitude of the summands, not the (possibly tiny) result.
        let wtw = hessian_h_euclidean(ctx.basis());
        let mut scale: f64 = 1.0;
        for a in 0..ctx.rank() {
            for b in 0..ctx.rank() {
                scale += nu[a].abs()
                    * ctx.anchor()[a]
                    * ctx.anchor()[b]
                    * nu[b].abs()
                    * wtw.get(a, b);
            }
        }
        max_error =
            max_error.max((gap.quadratic_form - gap.paired_difference).abs() / scale);
        max_error = max_error.max((-gap.quadratic_form).max(0.0) / scale);
        max_error = max_error.max((-gap.paired_difference).max(0.0) / scale);
    }
    Ok(CheckResult::from_measure(
        "psd_gap_two_evaluations",
        max_error,
        1e-12,
        cases,
        "both quadratic-form evaluations agree and are non-negative, relative to term scale",
    ))
}

fn curvature_dominance_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 200;
    for _ in 0..cases {
        let ctx = sample_aux(rng);
        let k = k_matrix(&ctx);
        let wtw = hessian_h_euclidean(ctx.basis());
        for a in 0..ctx.rank() {
            max_error = max_error.max(wtw.get(a, a) - k.get(a, a));
        }
    }
    Ok(CheckResult::from_measure(
        "curvature_dominates_hessian_diagonal",
        max_error.max(0.0),
        1e-12,
        cases,
        "K_aa >= (W^T W)_aa at every anchor",
    ))
}

fn jensen_weight_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 200;
    for _ in 0..cases {
        let ctx = sample_aux(rng);
        for i in 0..ctx.basis().rows() {
            let alpha = jensen_weights(&ctx, i)?;
            let sum: f64 = alpha.iter().sum();
            max_error = max_error.max((sum - 1.0).abs());
            for a in alpha {
                max_error = max_error.max((-a).max(0.0));
                max_error = max_error.max((a - 1.0).max(0.0));
            }
        }
    }
    Ok(CheckResult::from_measure(
        "jensen_weights_form_convex_combination",
        max_error,
        1e-12,
        cases,
        "weights are in [0, 1] and sum to 1 for every row",
    ))
}

fn adaptive_rate_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let (v, w, h) = sample_instance(rng, 6, 6, 3, 0.1, 1.2);

        let additive = additive_step(&h, &eta_euclidean(&w, &h)?, &grad_h_euclidean(&v, &w, &h)?)?;
        let multiplicative = update_h_euclidean(&v, &w, &h, DEFAULT_EPS)?;
        max_error = max_error.max(additive.max_abs_diff(&multiplicative)?);

        let additive = additive_step(&h, &eta_gkl(&w, &h)?, &grad_h_gkl(&v, &w, &h)?)?;
        let multiplicative = update_h_gkl(&v, &w, &h, DEFAULT_EPS)?;
        max_error = max_error.max(additive.max_abs_diff(&multiplicative)?);
    }
    Ok(CheckResult::from_measure(
        "adaptive_rate_reproduces_multiplicative",
        max_error,
        1e-12,
        cases,
        "h - eta .* grad equals the multiplicative update for both rates",
    ))
}

// ---- counterexample and landscape checks --------------------------------

fn counterexample_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let kl_unit = 4.0_f64.ln() - 3.0_f64.ln() - 1.0;
    let mut cases = 0;

    for &v in &[0.5, 1.0, 2.0, 4.0] {
        let euclid_want = -v * v / 16.0;
        let kl_want = v * kl_unit;
        max_error = max_error.max(rel_err(euclid_scalar_counterexample(v)?.gap, euclid_want));
        max_error = max_error.max(rel_err(kl_scalar_counterexample(v)?.gap, kl_want));
        for &r in &[1usize, 3, 7] {
            max_error = max_error.max(rel_err(
                euclid_vector_counterexample(v, r)?.gap,
                euclid_want,
            ));
            max_error = max_error.max(rel_err(kl_vector_counterexample(v, r)?.gap, kl_want));
            cases += 2;
        }
    }

    // Matrix embeddings reproduce the same gaps, with a looser budget
    // folded into the shared relative measure.
    for &(n, m, r) in &[(1usize, 1usize, 1usize), (3, 2, 2), (4, 3, 2)] {
        let e = matrix_nonconvexity_witness(CostKind::Euclidean, n, m, r, 1.0)?;
        max_error = max_error.max((e.gap - (-1.0 / 16.0)).abs() / 1e4);
        let k = matrix_nonconvexity_witness(CostKind::GeneralizedKl, n, m, r, 1.0)?;
        max_error = max_error.max((k.gap - kl_unit).abs() / 1e4);
        cases += 2;
    }

    // Every probe must certify non-convexity for random targets.
    for _ in 0..100 {
        let v = rng.random_range(1e-6..=10.0);
        let r = rng.random_range(1..=7);
        if euclid_scalar_counterexample(v)?.gap >= 0.0
            || euclid_vector_counterexample(v, r)?.gap >= 0.0
            || kl_scalar_counterexample(v)?.gap >= 0.0
            || kl_vector_counterexample(v, r)?.gap >= 0.0
        {
            max_error = max_error.max(1.0);
        }
        cases += 4;
    }

    Ok(CheckResult::from_measure(
        "counterexample_gaps_match_closed_forms",
        max_error,
        1e-12,
        cases,
        "midpoint gaps equal -v^2/16 and v*log(4/(3e)); all gaps negative",
    ))
}

fn landscape_check(_rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let sample = landscape_sample(1.0, 1.0, 0.01, 10.0, 1000)?;
    let mut violations = 0usize;

    for pair in sample.kld_values.windows(2) {
        if pair[1] >= pair[0] {
            violations += 1;
        }
    }

    let mut best = 0;
    for (i, &g) in sample.gkld_values.iter().enumerate() {
        if g < 0.0 {
            violations += 1;
        }
        if g < sample.gkld_values[best] {
            best = i;
        }
    }
    let nearest = sample
        .h_grid
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - sample.h_star)
                .abs()
                .partial_cmp(&(b.1 - sample.h_star).abs())
                .unwrap()
        })
        .unwrap()
        .0;
    if best != nearest {
        violations += 1;
    }

    // The analytic derivative must change sign exactly once.
    let mut flips = 0;
    let mut prev_sign = 0i8;
    for &h in &sample.h_grid {
        let d = gkl_scalar_derivative(1.0, &[1.0], &[h], 0)?;
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if prev_sign != 0 && sign != prev_sign {
                flips += 1;
            }
            prev_sign = sign;
        }
    }
    if flips != 1 {
        violations += 1;
    }

    Ok(CheckResult::from_measure(
        "landscape_kld_decreasing_gkld_unimodal",
        violations as f64,
        0.0,
        sample.h_grid.len(),
        "plain divergence strictly decreasing; generalized divergence unimodal at v/w",
    ))
}

fn transposition_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut max_error: f64 = 0.0;
    let cases = 50;
    for _ in 0..cases {
        let (v, w, h) = sample_instance(rng, 8, 8, 3, 0.1, 1.3);

        let via_transpose = update_w_euclidean_scaled(&v, &w, &h, DEFAULT_EPS, 1.0)?;
        let direct = update_w_euclidean_direct(&v, &w, &h, DEFAULT_EPS)?;
        for (a, b) in via_transpose.data().iter().zip(direct.data()) {
            max_error = max_error.max((a - b).abs() / (1.0 + b.abs()));
        }

        let via_transpose = update_w_gkl_scaled(&v, &w, &h, DEFAULT_EPS, 1.0)?;
        let direct = update_w_gkl_direct(&v, &w, &h, DEFAULT_EPS)?;
        for (a, b) in via_transpose.data().iter().zip(direct.data()) {
            max_error = max_error.max((a - b).abs() / (1.0 + b.abs()));
        }
    }
    Ok(CheckResult::from_measure(
        "transposition_duality_w_updates",
        max_error,
        1e-14,
        cases,
        "transposed-route W updates match their direct formulas",
    ))
}

fn zero_absorption_check(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut violations = 0usize;
    let cases = 50;
    for _ in 0..cases {
        let (v, w, h) = sample_instance(rng, 6, 6, 3, 0.1, 1.0);
        let mut data = h.data().to_vec();
        let kill = rng.random_range(0..data.len());
        data[kill] = 0.0;
        let h = NonNegMatrix::new(h.rows(), h.cols(), data)?;

        for updated in [
            update_h_euclidean(&v, &w, &h, DEFAULT_EPS)?,
            update_h_gkl(&v, &w, &h, DEFAULT_EPS)?,
        ] {
            if updated.data()[kill] != 0.0 {
                violations += 1;
            }
            if updated.data().iter().any(|&x| x < 0.0) {
                violations += 1;
            }
        }
    }
    Ok(CheckResult::from_measure(
        "zero_entries_absorbed",
        violations as f64,
        0.0,
        cases,
        "exact zeros stay exactly zero and nothing goes negative",
    ))
}
