//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, NmfError>;

#[derive(Debug, Error)]
pub enum NmfError {
    /// Incompatible matrix dimensions for an operation.
    #[error("{op}: dimension mismatch between {left_rows}x{left_cols} and {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    /// A matrix entry was negative where non-negativity is required.
    #[error("negative value {value} at row {row}, col {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    /// A matrix entry was NaN or infinite.
    #[error("non-finite value at row {row}, col {col}")]
    NonFiniteEntry { row: usize, col: usize },

    /// A divergence term v*log(v/x) was requested with v > 0 and x == 0.
    #[error("divergence undefined: positive value against zero model entry at row {row}, col {col}")]
    ZeroModelValue { row: usize, col: usize },

    /// Input rejected before any iteration (e.g. all-zero row under the
    /// generalized KL cost, or an all-zero basis row for Jensen weights).
    #[error("degenerate input: {reason}")]
    DegenerateInput { reason: String },

    /// A scalar argument or configuration field is out of range.
    #[error("invalid parameter: {reason}")]
    InvalidParam { reason: String },

    /// CSV row has a different number of cells than the first row.
    #[error("ragged csv: row {row} has {got} cells, expected {expected}")]
    CsvRagged { row: usize, expected: usize, got: usize },

    /// CSV cell failed to parse as a number.
    #[error("invalid number {cell:?} at row {row}, col {col}")]
    CsvBadCell { row: usize, col: usize, cell: String },

    /// The objective evaluated to NaN or infinity during a solve.
    #[error("cost became non-finite at iteration {iter}")]
    NonFiniteCost { iter: usize },

    /// The recorded cost increased beyond the allowed slack; the update
    /// rules guarantee this never happens, so the run is aborted.
    #[error("cost increased at iteration {iter}: {prev} -> {current}")]
    MonotonicityViolation { iter: usize, prev: f64, current: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NmfError {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        NmfError::ShapeMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        NmfError::InvalidParam {
            reason: reason.into(),
        }
    }

    pub(crate) fn degenerate(reason: impl Into<String>) -> Self {
        NmfError::DegenerateInput {
            reason: reason.into(),
        }
    }
}
