//! Dense row-major matrix containers and the small set of kernels the
//! rest of the crate is built on.
//!
//! Two types: [`Matrix`] holds any finite real entries (gradients,
//! differences), [`NonNegMatrix`] additionally guarantees every entry
//! is >= 0. Storage is a flat `Vec<f64>` in row-major order; the sizes
//! involved are small, so there is no attempt at blocking or SIMD.

use std::ops::Deref;

use crate::error::{NmfError, Result};

/// Denominator floor applied wherever a multiplicative rule divides.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Dense matrix of finite `f64` entries, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from a flat row-major buffer, rejecting NaN and
    /// infinities and checking the length.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NmfError::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(NmfError::invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        for (idx, &x) in data.iter().enumerate() {
            if !x.is_finite() {
                return Err(NmfError::NonFiniteEntry {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(NmfError::invalid("matrix dimensions must be positive"));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(NmfError::CsvRagged {
                    row: i,
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Fills entry (i, j) with `f(i, j)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Standard product, summing the inner index in ascending order so
    /// results are reproducible across call sites.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(NmfError::shape("matmul", self.shape(), other.shape()));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.data[i * self.cols + k] * other.data[k * other.cols + j];
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    /// Matrix-vector product; `x` must have length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(NmfError::shape("matvec", self.shape(), (x.len(), 1)));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * x[k];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Elementwise combination of two equally shaped matrices.
    pub fn zip_map(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(NmfError::shape(op, self.shape(), other.shape()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_map(other, "sub", |a, b| a - b)
    }

    /// Column sums, used for the KL update denominators.
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                sums[j] += self.data[i * self.cols + j];
            }
        }
        sums
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Largest entrywise absolute difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(NmfError::shape("max_abs_diff", self.shape(), other.shape()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs())))
    }
}

/// Dense matrix whose entries are finite and >= 0.
///
/// Derefs to [`Matrix`] for read access; any mutation goes through a
/// constructor so the invariant cannot be broken from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct NonNegMatrix(Matrix);

impl NonNegMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let m = Matrix::new(rows, cols, data)?;
        Self::from_matrix(m)
    }

    /// Validates an existing matrix entrywise, reporting the offending
    /// coordinate on failure.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        for (idx, &x) in m.data.iter().enumerate() {
            if x < 0.0 {
                return Err(NmfError::NegativeEntry {
                    row: idx / m.cols,
                    col: idx % m.cols,
                    value: x,
                });
            }
        }
        Ok(NonNegMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(NmfError::invalid("fill value must be finite and >= 0"));
        }
        Ok(NonNegMatrix(Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }))
    }

    /// Wraps a matrix known to be non-negative by construction
    /// (products, ratios and Hadamard combinations of non-negative
    /// inputs). Checked in debug builds.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        debug_assert!(m.data.iter().all(|&x| x >= 0.0 && x.is_finite()));
        NonNegMatrix(m)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn transpose(&self) -> NonNegMatrix {
        NonNegMatrix(self.0.transpose())
    }
}

impl Deref for NonNegMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Elementwise `num / max(den, eps)`.
///
/// The floor is applied inside the ratio rather than by clipping the
/// operand matrices, so cost evaluation always sees unmodified values.
pub fn hadamard_ratio(num: &NonNegMatrix, den: &NonNegMatrix, eps: f64) -> Result<NonNegMatrix> {
    if eps <= 0.0 {
        return Err(NmfError::invalid("eps must be > 0"));
    }
    let out = num
        .as_matrix()
        .zip_map(den.as_matrix(), "hadamard_ratio", |n, d| n / d.max(eps))?;
    Ok(NonNegMatrix::from_matrix_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn(rows: &[Vec<f64>]) -> NonNegMatrix {
        NonNegMatrix::from_rows(rows).unwrap()
    }

    // Independent reference for matmul: plain triple loop over copies.
    fn matmul_oracle(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for k in 0..a.cols() {
                for j in 0..b.cols() {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + a.get(i, k) * b.get(k, j));
                }
            }
        }
        out
    }

    fn lcg_matrix(rows: usize, cols: usize, seed: &mut u64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64) / (1u64 << 53) as f64 * 2.0 - 1.0
        })
    }

    #[test]
    fn matmul_identity() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let id = Matrix::identity(2);
        assert_eq!(id.matmul(&a).unwrap(), a);
    }

    #[test]
    fn matmul_column_selection() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let e1 = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let got = a.matmul(&e1).unwrap();
        assert_eq!(got.data(), &[2.0, 4.0]);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut seed = 42;
        let a = lcg_matrix(3, 4, &mut seed);
        let b = lcg_matrix(4, 2, &mut seed);
        let got = a.matmul(&b).unwrap();
        let want = matmul_oracle(&a, &b);
        for (x, y) in got.data().iter().zip(want.data()) {
            assert!((x - y).abs() <= 1e-14 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("matmul"), "{msg}");
    }

    #[test]
    fn transpose_examples() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.transpose().data(), &[1.0, 3.0, 2.0, 4.0]);

        let row = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let col = row.transpose();
        assert_eq!(col.shape(), (3, 1));

        let mut seed = 7;
        let m = lcg_matrix(5, 3, &mut seed);
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn hadamard_ratio_ones_and_floor() {
        let a = nn(&[vec![2.0, 3.0], vec![0.5, 1.0]]);
        let ones = hadamard_ratio(&a, &a, 1e-12).unwrap();
        assert!(ones.data().iter().all(|&x| x == 1.0));

        let num = nn(&[vec![2.0]]);
        let den = nn(&[vec![0.0]]);
        let r = hadamard_ratio(&num, &den, 1e-12).unwrap();
        assert_eq!(r.get(0, 0), 2e12);
    }

    #[test]
    fn hadamard_ratio_matches_scalar_loop() {
        let mut seed = 99;
        let num = NonNegMatrix::from_matrix(lcg_matrix(4, 3, &mut seed).map(f64::abs)).unwrap();
        let den = NonNegMatrix::from_matrix(lcg_matrix(4, 3, &mut seed).map(f64::abs)).unwrap();
        let eps = 1e-9;
        let got = hadamard_ratio(&num, &den, eps).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let want = num.get(i, j) / den.get(i, j).max(eps);
                assert_eq!(got.get(i, j), want);
            }
        }
    }

    #[test]
    fn nonneg_rejects_negative_with_coordinates() {
        let err = NonNegMatrix::new(2, 2, vec![1.0, 2.0, -3.0, 4.0]).unwrap_err();
        match err {
            NmfError::NegativeEntry { row, col, value } => {
                assert_eq!((row, col), (1, 0));
                assert_eq!(value, -3.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 2, vec![f64::INFINITY, 0.0]).is_err());
    }
}
