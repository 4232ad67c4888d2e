//! Numerical non-convexity counterexamples and the scalar divergence
//! landscape.
//!
//! Each counterexample evaluates a cost at two probe points and their
//! midpoint and reports L (cost at the combination), R (combination of
//! costs) and the gap R - L. A negative gap violates the convexity
//! inequality. L and R are always computed by evaluating the cost
//! functions; the known closed-form gaps are asserted in tests, never
//! returned as data.

use serde::Serialize;
use std::io::Write;

use crate::costs::{euclidean_cost, gkl_cost, CostKind};
use crate::error::{NmfError, Result};
use crate::matrix::{Matrix, NonNegMatrix};

/// Outcome of one midpoint-convexity probe.
///
/// `points` holds the two probe points as flat coordinate vectors
/// (the w-part followed by the h-part; full factor matrices for the
/// matrix embedding).
#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub left: f64,
    pub right: f64,
    pub gap: f64,
    pub lambda: f64,
    pub points: [Vec<f64>; 2],
}

impl CounterexampleReport {
    fn from_costs(left: f64, right: f64, lambda: f64, points: [Vec<f64>; 2]) -> Self {
        CounterexampleReport {
            left,
            right,
            gap: right - left,
            lambda,
            points,
        }
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(NmfError::invalid(format!("{name} must be finite and > 0, got {x}")));
    }
    Ok(())
}

fn check_rank(r: usize) -> Result<()> {
    if r == 0 {
        return Err(NmfError::invalid("probe dimension r must be >= 1"));
    }
    Ok(())
}

/// Appendix-style squared-error probe cost (v - w^T h)^2 on the
/// single-entry problem, evaluated through the library cost function.
fn euclid_probe_cost(v: f64, w: &[f64], h: &[f64]) -> Result<f64> {
    let target = NonNegMatrix::new(1, 1, vec![v])?;
    let w_m = NonNegMatrix::new(1, w.len(), w.to_vec())?;
    let h_m = NonNegMatrix::new(h.len(), 1, h.to_vec())?;
    Ok(2.0 * euclidean_cost(&target, &w_m, &h_m)?)
}

fn gkl_probe_cost(v: f64, w: &[f64], h: &[f64]) -> Result<f64> {
    let target = NonNegMatrix::new(1, 1, vec![v])?;
    let w_m = NonNegMatrix::new(1, w.len(), w.to_vec())?;
    let h_m = NonNegMatrix::new(h.len(), 1, h.to_vec())?;
    gkl_cost(&target, &w_m, &h_m)
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| 0.5 * (x + y)).collect()
}

fn vector_probe(
    v: f64,
    x1: (Vec<f64>, Vec<f64>),
    x2: (Vec<f64>, Vec<f64>),
    cost: impl Fn(f64, &[f64], &[f64]) -> Result<f64>,
) -> Result<CounterexampleReport> {
    let mid_w = midpoint(&x1.0, &x2.0);
    let mid_h = midpoint(&x1.1, &x2.1);
    let left = cost(v, &mid_w, &mid_h)?;
    let right = 0.5 * cost(v, &x1.0, &x1.1)? + 0.5 * cost(v, &x2.0, &x2.1)?;
    let p1 = [x1.0.clone(), x1.1.clone()].concat();
    let p2 = [x2.0.clone(), x2.1.clone()].concat();
    Ok(CounterexampleReport::from_costs(left, right, 0.5, [p1, p2]))
}

/// Probes (v - w h)^2 at (0, 0) and (sqrt(v), sqrt(v)); the midpoint
/// lies above the chord, so the gap is -v^2/16.
pub fn euclid_scalar_counterexample(v: f64) -> Result<CounterexampleReport> {
    check_positive("v", v)?;
    let s = v.sqrt();
    vector_probe(v, (vec![0.0], vec![0.0]), (vec![s], vec![s]), euclid_probe_cost)
}

/// Vector version: probes at (0, 0) and (s, s) with all entries of s
/// equal to sqrt(v/r). The gap is -v^2/16 regardless of r.
pub fn euclid_vector_counterexample(v: f64, r: usize) -> Result<CounterexampleReport> {
    check_positive("v", v)?;
    check_rank(r)?;
    let s = (v / r as f64).sqrt();
    vector_probe(
        v,
        (vec![0.0; r], vec![0.0; r]),
        (vec![s; r], vec![s; r]),
        euclid_probe_cost,
    )
}

/// Probes the generalized KL cost at (sqrt(v), 3 sqrt(v)) and
/// (3 sqrt(v), sqrt(v)); the gap is v * log(4 / (3 e)).
pub fn kl_scalar_counterexample(v: f64) -> Result<CounterexampleReport> {
    check_positive("v", v)?;
    let s = v.sqrt();
    vector_probe(
        v,
        (vec![s], vec![3.0 * s]),
        (vec![3.0 * s], vec![s]),
        gkl_probe_cost,
    )
}

/// Vector version with s entries sqrt(v/r); the gap is again
/// v * log(4 / (3 e)) independent of r.
pub fn kl_vector_counterexample(v: f64, r: usize) -> Result<CounterexampleReport> {
    check_positive("v", v)?;
    check_rank(r)?;
    let s = (v / r as f64).sqrt();
    let small = vec![s; r];
    let big = vec![3.0 * s; r];
    vector_probe(v, (small.clone(), big.clone()), (big, small), gkl_probe_cost)
}

/// Embeds the vector counterexample into a full n x m instance as the
/// pair (row 0 of W, column 0 of H) and evaluates the whole-matrix
/// cost at the three points.
///
/// Padding is chosen so every non-probe term of the total cost cancels
/// in R - L: for the Euclidean cost the non-probe rows of W and
/// columns of H are zero (their residual terms are the constants
/// V_ij^2 for any positive V fill, here 1.0); for the KL cost the
/// factors are padded with 1.0 and the non-probe entries of V are
/// zero, which turns every non-probe term into a linear function of
/// the probe coordinates, and linear terms drop out of the midpoint
/// gap exactly.
pub fn matrix_nonconvexity_witness(
    kind: CostKind,
    n: usize,
    m: usize,
    r: usize,
    v: f64,
) -> Result<CounterexampleReport> {
    check_positive("v", v)?;
    if n == 0 || m == 0 || r == 0 {
        return Err(NmfError::invalid("matrix probe dimensions must be >= 1"));
    }
    let s = (v / r as f64).sqrt();
    let (probe1, probe2): ((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>)) = match kind {
        CostKind::Euclidean => ((vec![0.0; r], vec![0.0; r]), (vec![s; r], vec![s; r])),
        CostKind::GeneralizedKl => {
            let small = vec![s; r];
            let big = vec![3.0 * s; r];
            ((small.clone(), big.clone()), (big, small))
        }
    };

    let (factor_fill, data_fill) = match kind {
        CostKind::Euclidean => (0.0, 1.0),
        CostKind::GeneralizedKl => (1.0, 0.0),
    };

    let data = NonNegMatrix::from_matrix(Matrix::from_fn(n, m, |i, j| {
        if i == 0 && j == 0 {
            v
        } else {
            data_fill
        }
    }))?;

    let embed = |w_row: &[f64], h_col: &[f64]| -> Result<(NonNegMatrix, NonNegMatrix)> {
        let w = NonNegMatrix::from_matrix(Matrix::from_fn(n, r, |i, a| {
            if i == 0 {
                w_row[a]
            } else {
                factor_fill
            }
        }))?;
        let h = NonNegMatrix::from_matrix(Matrix::from_fn(r, m, |a, j| {
            if j == 0 {
                h_col[a]
            } else {
                factor_fill
            }
        }))?;
        Ok((w, h))
    };

    let full_cost = |w: &NonNegMatrix, h: &NonNegMatrix| -> Result<f64> {
        match kind {
            CostKind::Euclidean => Ok(2.0 * euclidean_cost(&data, w, h)?),
            CostKind::GeneralizedKl => gkl_cost(&data, w, h),
        }
    };

    let (w1, h1) = embed(&probe1.0, &probe1.1)?;
    let (w2, h2) = embed(&probe2.0, &probe2.1)?;
    let (wm, hm) = embed(&midpoint(&probe1.0, &probe2.0), &midpoint(&probe1.1, &probe2.1))?;

    let left = full_cost(&wm, &hm)?;
    let right = 0.5 * full_cost(&w1, &h1)? + 0.5 * full_cost(&w2, &h2)?;
    let p1 = [w1.data().to_vec(), h1.data().to_vec()].concat();
    let p2 = [w2.data().to_vec(), h2.data().to_vec()].concat();
    Ok(CounterexampleReport::from_costs(left, right, 0.5, [p1, p2]))
}

/// Partial derivative of the generalized KL divergence of one data
/// entry with respect to h_a:
/// (W_a / sum_k W_k h_k) * (sum_k W_k h_k - v).
/// Negative below the stationary point v = sum_k W_k h_k, zero there,
/// positive above.
pub fn gkl_scalar_derivative(v: f64, w_row: &[f64], h: &[f64], a: usize) -> Result<f64> {
    check_positive("v", v)?;
    if w_row.len() != h.len() {
        return Err(NmfError::shape(
            "gkl_scalar_derivative",
            (1, w_row.len()),
            (h.len(), 1),
        ));
    }
    if a >= h.len() {
        return Err(NmfError::invalid(format!("component index {a} out of range")));
    }
    if w_row.iter().any(|&x| !(x.is_finite() && x > 0.0))
        || h.iter().any(|&x| !(x.is_finite() && x > 0.0))
    {
        return Err(NmfError::invalid(
            "derivative requires strictly positive coefficients",
        ));
    }
    let model: f64 = w_row.iter().zip(h).map(|(&wk, &hk)| wk * hk).sum();
    Ok(w_row[a] / model * (model - v))
}

/// Tabulated divergence landscape over a positive grid of h values
/// for the scalar model w * h against the target v.
#[derive(Debug, Clone, Serialize)]
pub struct LandscapeSample {
    pub h_grid: Vec<f64>,
    pub kld_values: Vec<f64>,
    pub gkld_values: Vec<f64>,
    /// Stationary point of the generalized divergence, v / w.
    pub h_star: f64,
}

impl LandscapeSample {
    /// CSV with header `h,kld,gkld`, one grid point per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "h,kld,gkld")?;
        for i in 0..self.h_grid.len() {
            writeln!(
                out,
                "{},{},{}",
                self.h_grid[i], self.kld_values[i], self.gkld_values[i]
            )?;
        }
        Ok(())
    }
}

/// Evenly spaced grid over [min, max] inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(NmfError::invalid("grid needs at least 2 steps"));
    }
    if !(min.is_finite() && max.is_finite() && 0.0 < min && min < max) {
        return Err(NmfError::invalid(format!(
            "grid range must satisfy 0 < min < max, got [{min}, {max}]"
        )));
    }
    let step = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| min + i as f64 * step).collect())
}

/// Evaluates both divergences of v against w * h over the grid.
pub fn landscape_sample(v: f64, w: f64, h_min: f64, h_max: f64, steps: usize) -> Result<LandscapeSample> {
    check_positive("v", v)?;
    check_positive("w", w)?;
    let h_grid = linspace(h_min, h_max, steps)?;
    let kld_values: Vec<f64> = h_grid.iter().map(|&h| v * (v / (w * h)).ln()).collect();
    let gkld_values: Vec<f64> = h_grid
        .iter()
        .map(|&h| v * (v / (w * h)).ln() - v + w * h)
        .collect();
    Ok(LandscapeSample {
        h_grid,
        kld_values,
        gkld_values,
        h_star: v / w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EUCLID_GAP: f64 = -1.0 / 16.0;
    // log(4) - log(3) - 1
    fn kl_gap_per_unit() -> f64 {
        4.0_f64.ln() - 3.0_f64.ln() - 1.0
    }

    #[test]
    fn euclid_scalar_values() {
        let rep = euclid_scalar_counterexample(1.0).unwrap();
        assert!((rep.left - 0.5625).abs() < 1e-15);
        assert!((rep.right - 0.5).abs() < 1e-15);
        assert!((rep.gap - (-0.0625)).abs() < 1e-15);
        assert_eq!(rep.gap, rep.right - rep.left);

        let rep = euclid_scalar_counterexample(2.0).unwrap();
        assert!((rep.gap - (-0.25)).abs() < 1e-14);
        let rep = euclid_scalar_counterexample(4.0).unwrap();
        assert!((rep.gap - (-1.0)).abs() < 1e-14);
    }

    #[test]
    fn euclid_vector_gap_independent_of_r() {
        for r in [1, 3, 7] {
            let rep = euclid_vector_counterexample(1.0, r).unwrap();
            assert!(
                (rep.gap - EUCLID_GAP).abs() <= 1e-12 * EUCLID_GAP.abs(),
                "r={r}: gap={}",
                rep.gap
            );
        }
    }

    #[test]
    fn kl_scalar_values() {
        let rep = kl_scalar_counterexample(1.0).unwrap();
        assert!((rep.left - (3.0 - 4.0_f64.ln())).abs() < 1e-14);
        assert!((rep.right - (2.0 - 3.0_f64.ln())).abs() < 1e-14);
        assert!((rep.gap - kl_gap_per_unit()).abs() < 1e-14);

        let rep = kl_scalar_counterexample(2.0).unwrap();
        assert!((rep.gap - 2.0 * kl_gap_per_unit()).abs() < 1e-13);
        let rep = kl_scalar_counterexample(0.5).unwrap();
        assert!((rep.gap - 0.5 * kl_gap_per_unit()).abs() < 1e-14);
    }

    #[test]
    fn kl_vector_gap_independent_of_r() {
        for (v, r) in [(1.0, 1), (1.0, 4), (3.0, 2)] {
            let rep = kl_vector_counterexample(v, r).unwrap();
            let want = v * kl_gap_per_unit();
            assert!(
                (rep.gap - want).abs() <= 1e-12 * want.abs(),
                "v={v} r={r}: gap={}",
                rep.gap
            );
        }
    }

    #[test]
    fn matrix_witness_degenerate_and_full() {
        let rep = matrix_nonconvexity_witness(CostKind::Euclidean, 1, 1, 1, 1.0).unwrap();
        assert!((rep.gap - EUCLID_GAP).abs() < 1e-15);

        let rep = matrix_nonconvexity_witness(CostKind::Euclidean, 3, 2, 2, 1.0).unwrap();
        assert!((rep.gap - EUCLID_GAP).abs() < 1e-10, "gap={}", rep.gap);

        let rep = matrix_nonconvexity_witness(CostKind::GeneralizedKl, 3, 2, 2, 1.0).unwrap();
        assert!((rep.gap - kl_gap_per_unit()).abs() < 1e-8, "gap={}", rep.gap);
    }

    #[test]
    fn derivative_signs_and_values() {
        // Stationary at the exact model match.
        let d = gkl_scalar_derivative(1.0, &[1.0], &[1.0], 0).unwrap();
        assert_eq!(d, 0.0);

        let d = gkl_scalar_derivative(1.0, &[1.0], &[0.5], 0).unwrap();
        assert_eq!(d, -1.0);

        let d = gkl_scalar_derivative(1.0, &[2.0], &[1.0], 0).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn landscape_shapes_and_signs() {
        let sample = landscape_sample(1.0, 1.0, 0.1, 5.0, 100).unwrap();
        assert_eq!(sample.h_grid.len(), 100);
        assert_eq!(sample.h_star, 1.0);

        // KLD strictly decreasing across the grid.
        for pair in sample.kld_values.windows(2) {
            assert!(pair[1] < pair[0]);
        }

        // GKLD non-negative, minimized at the grid point nearest h*.
        let mut best = 0;
        for (i, &g) in sample.gkld_values.iter().enumerate() {
            assert!(g >= 0.0);
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
        assert_eq!(best, nearest);
    }

    #[test]
    fn derivative_sign_flips_at_h_star() {
        let sample = landscape_sample(1.0, 2.0, 0.1, 2.0, 50).unwrap();
        assert_eq!(sample.h_star, 0.5);
        let mut last_negative = None;
        let mut first_positive = None;
        for (i, &h) in sample.h_grid.iter().enumerate() {
            let d = gkl_scalar_derivative(1.0, &[2.0], &[h], 0).unwrap();
            if d < 0.0 {
                last_negative = Some(i);
            } else if d > 0.0 && first_positive.is_none() {
                first_positive = Some(i);
            }
        }
        let (ln, fp) = (last_negative.unwrap(), first_positive.unwrap());
        assert!(sample.h_grid[ln] < 0.5 && sample.h_grid[fp] > 0.5);
        assert_eq!(ln + 1, fp);
    }

    #[test]
    fn csv_output_has_expected_header() {
        let sample = landscape_sample(1.0, 1.0, 0.5, 2.0, 4).unwrap();
        let mut buf = Vec::new();
        sample.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("h,kld,gkld"));
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(euclid_scalar_counterexample(0.0).is_err());
        assert!(euclid_scalar_counterexample(-1.0).is_err());
        assert!(kl_vector_counterexample(1.0, 0).is_err());
        assert!(landscape_sample(1.0, 1.0, 2.0, 1.0, 10).is_err());
        assert!(landscape_sample(1.0, 1.0, 0.0, 1.0, 10).is_err());
        assert!(linspace(0.1, 1.0, 1).is_err());
    }
}
