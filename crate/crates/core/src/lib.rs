//! Dense non-negative matrix factorization by multiplicative updates.
//!
//! The crate factorizes a non-negative matrix V into non-negative
//! factors W and H with V ~= WH, minimizing either half the squared
//! Frobenius distance or the generalized Kullback-Leibler divergence.
//! Both update rules are the classical multiplicative forms; they are
//! derived here three ways (as rescaled gradient descent with an
//! adaptive rate, and as exact minimizers of two majorizing auxiliary
//! functions), and the [`verify`] module re-checks all of those
//! derivations numerically at runtime.
//!
//! Modules:
//! - [`matrix`]: dense row-major containers and kernels.
//! - [`costs`]: objectives, gradients, curvature.
//! - [`updates`]: multiplicative rules and adaptive learning rates.
//! - [`auxiliary`]: majorization-minimization on a single column.
//! - [`convexity`]: non-convexity counterexamples and the divergence
//!   landscape.
//! - [`solver`]: the alternating driver loop with trace recording.
//! - [`io`]: CSV ingestion and egress.
//! - [`verify`]: the deterministic verification battery.

pub mod auxiliary;
pub mod convexity;
pub mod costs;
pub mod error;
pub mod io;
pub mod matrix;
pub mod solver;
pub mod updates;
pub mod verify;

pub use costs::CostKind;
pub use error::{NmfError, Result};
pub use matrix::{hadamard_ratio, Matrix, NonNegMatrix, DEFAULT_EPS};
pub use solver::{init_factors, solve, InitScheme, IterationTrace, RunResult, SolverConfig, UpdateOrder};
pub use updates::Factorization;
pub use verify::{run_verify_suite, CheckResult, VerifyOptions, VerifyReport};
