//! Factorization driver: initialization, the alternating update loop,
//! stopping criteria and the per-iteration trace.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{cost_value, CostKind};
use crate::error::{NmfError, Result};
use crate::matrix::{NonNegMatrix, DEFAULT_EPS};
use crate::updates::{
    update_h_euclidean, update_h_gkl, update_w_euclidean, update_w_gkl, Factorization,
};

/// How the initial factors are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitScheme {
    /// Seeded i.i.d. uniform draws on [0.1, 1.0]; strictly positive and
    /// bounded away from zero so KL logs stay well conditioned.
    UniformPositive,
    /// Caller supplies the starting factors.
    Provided,
}

/// Which factor is updated first within one outer iteration. Both
/// half-steps are monotone on their own, so either order is valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateOrder {
    HThenW,
    WThenH,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rank: usize,
    pub cost: CostKind,
    pub max_iters: usize,
    /// Stop once the relative cost decrease over one full iteration
    /// drops below this.
    pub rel_tol: f64,
    /// Denominator floor used by every multiplicative update.
    pub eps: f64,
    pub seed: u64,
    pub init: InitScheme,
    pub order: UpdateOrder,
}

impl SolverConfig {
    pub fn new(rank: usize, cost: CostKind) -> Self {
        SolverConfig {
            rank,
            cost,
            max_iters: 200,
            rel_tol: 1e-6,
            eps: DEFAULT_EPS,
            seed: 0,
            init: InitScheme::UniformPositive,
            order: UpdateOrder::HThenW,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(NmfError::invalid("rank must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(NmfError::invalid("max_iters must be >= 1"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(NmfError::invalid("rel_tol must be > 0"));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(NmfError::invalid("eps must be > 0"));
        }
        Ok(())
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iter: usize,
    pub cost: f64,
    /// (previous - current) / max(previous, eps).
    pub rel_delta: f64,
    /// Whether the recorded step respected the monotonicity guarantee
    /// within slack.
    pub monotone_ok: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub factorization: Factorization,
    pub trace: Vec<IterationTrace>,
    pub converged: bool,
    pub iters_used: usize,
}

impl RunResult {
    pub fn final_cost(&self) -> Option<f64> {
        self.trace.last().map(|t| t.cost)
    }
}

/// Draws strictly positive starting factors for an n x m problem.
/// Identical seeds give bit-identical factors.
pub fn init_factors(n: usize, m: usize, config: &SolverConfig) -> Result<Factorization> {
    config.validate()?;
    if n == 0 || m == 0 {
        return Err(NmfError::invalid("matrix dimensions must be positive"));
    }
    if config.init == InitScheme::Provided {
        return Err(NmfError::invalid(
            "init scheme Provided requires explicit starting factors",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let r = config.rank;
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len).map(|_| rng.random_range(0.1..=1.0)).collect()
    };
    let w = NonNegMatrix::new(n, r, draw(n * r))?;
    let h = NonNegMatrix::new(r, m, draw(r * m))?;
    Factorization::new(w, h)
}

fn reject_degenerate_gkl(v: &NonNegMatrix) -> Result<()> {
    for i in 0..v.rows() {
        if (0..v.cols()).all(|j| v.get(i, j) == 0.0) {
            return Err(NmfError::degenerate(format!(
                "row {i} of the input is all zeros, which the KL cost cannot fit"
            )));
        }
    }
    for j in 0..v.cols() {
        if (0..v.rows()).all(|i| v.get(i, j) == 0.0) {
            return Err(NmfError::degenerate(format!(
                "column {j} of the input is all zeros, which the KL cost cannot fit"
            )));
        }
    }
    Ok(())
}

/// Runs the alternating multiplicative updates until the relative cost
/// decrease falls below `rel_tol` or `max_iters` is reached.
///
/// The cost is recorded after every full iteration; an increase beyond
/// the 1e-12 slack aborts the run, since the update rules guarantee it
/// cannot happen.
pub fn solve(
    v: &NonNegMatrix,
    config: &SolverConfig,
    initial: Option<Factorization>,
) -> Result<RunResult> {
    config.validate()?;
    if config.cost == CostKind::GeneralizedKl {
        reject_degenerate_gkl(v)?;
    }

    let factors = match initial {
        Some(f) => {
            if f.w.shape() != (v.rows(), config.rank) || f.h.shape() != (config.rank, v.cols()) {
                return Err(NmfError::shape("solve", f.w.shape(), f.h.shape()));
            }
            f
        }
        None => init_factors(v.rows(), v.cols(), config)?,
    };
    let (mut w, mut h) = (factors.w, factors.h);

    let mut prev = cost_value(config.cost, v, &w, &h)?;
    if !prev.is_finite() {
        return Err(NmfError::NonFiniteCost { iter: 0 });
    }

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters_used = 0;

    for iter in 1..=config.max_iters {
        match (config.cost, config.order) {
            (CostKind::Euclidean, UpdateOrder::HThenW) => {
                h = update_h_euclidean(v, &w, &h, config.eps)?;
                w = update_w_euclidean(v, &w, &h, config.eps)?;
            }
            (CostKind::Euclidean, UpdateOrder::WThenH) => {
                w = update_w_euclidean(v, &w, &h, config.eps)?;
                h = update_h_euclidean(v, &w, &h, config.eps)?;
            }
            (CostKind::GeneralizedKl, UpdateOrder::HThenW) => {
                h = update_h_gkl(v, &w, &h, config.eps)?;
                w = update_w_gkl(v, &w, &h, config.eps)?;
            }
            (CostKind::GeneralizedKl, UpdateOrder::WThenH) => {
                w = update_w_gkl(v, &w, &h, config.eps)?;
                h = update_h_gkl(v, &w, &h, config.eps)?;
            }
        }

        let current = cost_value(config.cost, v, &w, &h)?;
        if !current.is_finite() {
            return Err(NmfError::NonFiniteCost { iter });
        }
        let rel_delta = (prev - current) / prev.max(config.eps);
        let monotone_ok = rel_delta >= -1e-12;
        trace.push(IterationTrace {
            iter,
            cost: current,
            rel_delta,
            monotone_ok,
        });
        iters_used = iter;
        if !monotone_ok {
            return Err(NmfError::MonotonicityViolation {
                iter,
                prev,
                current,
            });
        }
        if rel_delta < config.rel_tol {
            converged = true;
            break;
        }
        prev = current;
    }

    Ok(RunResult {
        factorization: Factorization::new(w, h)?,
        trace,
        converged,
        iters_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn(rows: &[Vec<f64>]) -> NonNegMatrix {
        NonNegMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_in_range() {
        let config = SolverConfig::new(3, CostKind::Euclidean);
        let a = init_factors(5, 4, &config).unwrap();
        let b = init_factors(5, 4, &config).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.h, b.h);
        assert!(a.w.data().iter().chain(a.h.data()).all(|&x| (0.1..=1.0).contains(&x)));

        let mut other = config.clone();
        other.seed = 1;
        let c = init_factors(5, 4, &other).unwrap();
        assert_ne!(a.w, c.w);
    }

    #[test]
    fn exact_fixed_point_converges_immediately() {
        let w0 = nn(&[vec![0.7, 1.2], vec![0.4, 0.9], vec![1.1, 0.3]]);
        let h0 = nn(&[vec![0.5, 1.4], vec![0.8, 0.6]]);
        let v = NonNegMatrix::from_matrix(w0.matmul(&h0).unwrap()).unwrap();
        let config = SolverConfig::new(2, CostKind::Euclidean);
        let result = solve(&v, &config, Some(Factorization::new(w0.clone(), h0.clone()).unwrap()))
            .unwrap();
        assert!(result.converged);
        assert_eq!(result.iters_used, 1);
        assert!(result.final_cost().unwrap() <= 1e-20);
        assert!(result.factorization.w.max_abs_diff(&w0).unwrap() <= 1e-12);
        assert!(result.factorization.h.max_abs_diff(&h0).unwrap() <= 1e-12);
    }

    #[test]
    fn scalar_problem_solves_in_one_iteration() {
        let v = nn(&[vec![2.0]]);
        let start = Factorization::new(nn(&[vec![1.0]]), nn(&[vec![1.0]])).unwrap();
        let config = SolverConfig::new(1, CostKind::Euclidean);
        let result = solve(&v, &config, Some(start)).unwrap();
        assert_eq!(result.trace[0].cost, 0.0);
    }

    #[test]
    fn trace_is_monotone_and_deterministic() {
        let v = nn(&[
            vec![1.0, 0.5, 0.25, 2.0],
            vec![0.75, 1.5, 0.4, 0.9],
            vec![2.2, 0.3, 1.1, 0.6],
        ]);
        for cost in [CostKind::Euclidean, CostKind::GeneralizedKl] {
            let mut config = SolverConfig::new(2, cost);
            config.max_iters = 50;
            config.seed = 7;
            let a = solve(&v, &config, None).unwrap();
            let b = solve(&v, &config, None).unwrap();
            assert_eq!(a.trace.len(), b.trace.len());
            for (x, y) in a.trace.iter().zip(&b.trace) {
                assert_eq!(x.cost.to_bits(), y.cost.to_bits());
            }
            assert!(a.trace.iter().all(|t| t.monotone_ok));
        }
    }

    #[test]
    fn zero_entry_in_initial_h_stays_zero() {
        let v = nn(&[vec![1.0, 0.5], vec![0.75, 1.5]]);
        let w0 = nn(&[vec![0.6, 0.9], vec![0.8, 0.2]]);
        let h0 = nn(&[vec![0.0, 1.0], vec![0.7, 0.4]]);
        let mut config = SolverConfig::new(2, CostKind::Euclidean);
        config.max_iters = 25;
        let result = solve(&v, &config, Some(Factorization::new(w0, h0).unwrap())).unwrap();
        assert_eq!(result.factorization.h.get(0, 0), 0.0);
    }

    #[test]
    fn gkl_rejects_all_zero_rows_and_columns() {
        let with_zero_row = nn(&[vec![0.0, 0.0], vec![1.0, 2.0]]);
        let config = SolverConfig::new(1, CostKind::GeneralizedKl);
        assert!(matches!(
            solve(&with_zero_row, &config, None),
            Err(NmfError::DegenerateInput { .. })
        ));

        let with_zero_col = nn(&[vec![0.0, 1.0], vec![0.0, 2.0]]);
        assert!(matches!(
            solve(&with_zero_col, &config, None),
            Err(NmfError::DegenerateInput { .. })
        ));

        // Euclidean accepts the same inputs.
        let config = SolverConfig::new(1, CostKind::Euclidean);
        assert!(solve(&with_zero_row, &config, None).is_ok());
    }

    #[test]
    fn gkl_h_trajectory_invariant_under_input_scaling() {
        let v = nn(&[vec![1.0, 0.5, 1.25], vec![0.75, 1.5, 0.4]]);
        let scale = 3.0;
        let v_scaled = NonNegMatrix::from_matrix(v.as_matrix().map(|x| x * scale)).unwrap();

        let mut config = SolverConfig::new(2, CostKind::GeneralizedKl);
        config.max_iters = 20;
        config.rel_tol = 1e-15;
        let start = init_factors(2, 3, &config).unwrap();
        let start_scaled = Factorization::new(
            NonNegMatrix::from_matrix(start.w.as_matrix().map(|x| x * scale)).unwrap(),
            start.h.clone(),
        )
        .unwrap();

        let plain = solve(&v, &config, Some(start)).unwrap();
        let scaled = solve(&v_scaled, &config, Some(start_scaled)).unwrap();
        assert!(
            plain
                .factorization
                .h
                .max_abs_diff(&scaled.factorization.h)
                .unwrap()
                <= 1e-10
        );
    }

    #[test]
    fn both_update_orders_run_monotonically() {
        let v = nn(&[vec![1.0, 0.5], vec![0.75, 1.5], vec![0.3, 0.9]]);
        for order in [UpdateOrder::HThenW, UpdateOrder::WThenH] {
            let mut config = SolverConfig::new(2, CostKind::Euclidean);
            config.order = order;
            config.max_iters = 30;
            let result = solve(&v, &config, None).unwrap();
            assert!(result.trace.iter().all(|t| t.monotone_ok));
        }
    }

    #[test]
    fn config_validation() {
        let v = nn(&[vec![1.0]]);
        let mut config = SolverConfig::new(0, CostKind::Euclidean);
        assert!(solve(&v, &config, None).is_err());
        config.rank = 1;
        config.eps = 0.0;
        assert!(solve(&v, &config, None).is_err());
        config.eps = 1e-12;
        config.rel_tol = -1.0;
        assert!(solve(&v, &config, None).is_err());
    }
}
