//! Minimal row-major matrix type for the model's numerics.

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == c), "ragged rows");
        Matrix {
            rows: rows.len(),
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: T) {
        self.data.fill(v);
    }

    /// `self += other`, element-wise.
    pub fn add_assign(&mut self, other: &Matrix<T>) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `self @ b`, allocating the result.
    pub fn matmul(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(self.rows, b.cols);
        self.matmul_into(b, &mut out);
        out
    }

    /// `out = self @ b` (out is overwritten).
    pub fn matmul_into(&self, b: &Matrix<T>, out: &mut Matrix<T>) {
        assert_eq!(self.cols, b.rows, "matmul: inner dims differ");
        assert_eq!((out.rows, out.cols), (self.rows, b.cols), "matmul: bad out shape");
        out.data.fill(T::zero());
        self.matmul_acc(b, out);
    }

    /// `out += self @ b`.
    pub fn matmul_acc(&self, b: &Matrix<T>, out: &mut Matrix<T>) {
        assert_eq!(self.cols, b.rows, "matmul: inner dims differ");
        assert_eq!((out.rows, out.cols), (self.rows, b.cols), "matmul: bad out shape");
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                    *o += aik * bkj;
                }
            }
        }
    }

    /// `self @ b^T`, allocating the result.
    pub fn matmul_tb(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, b.cols, "matmul_tb: inner dims differ");
        let mut out = Matrix::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = b.row(j);
                let mut acc = T::zero();
                for (&x, &y) in a_row.iter().zip(b_row) {
                    acc += x * y;
                }
                *o = acc;
            }
        }
        out
    }

    /// `out += self^T @ b` (gradient accumulation for `x @ W` weights).
    pub fn matmul_ta_acc(&self, b: &Matrix<T>, out: &mut Matrix<T>) {
        assert_eq!(self.rows, b.rows, "matmul_ta: inner dims differ");
        assert_eq!((out.rows, out.cols), (self.cols, b.cols), "matmul_ta: bad out shape");
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (i, &aki) in a_row.iter().enumerate() {
                let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                    *o += aki * bkj;
                }
            }
        }
    }

    /// Adds a 1×cols bias row to every row.
    pub fn add_bias(&mut self, bias: &Matrix<T>) {
        debug_assert_eq!(bias.rows, 1);
        debug_assert_eq!(bias.cols, self.cols);
        for r in 0..self.rows {
            for (x, &b) in self.row_mut(r).iter_mut().zip(&bias.data) {
                *x += b;
            }
        }
    }

    /// Sum of each column as a 1×cols matrix (bias gradients).
    pub fn col_sums(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, &x) in out.data.iter_mut().zip(self.row(r)) {
                *o += x;
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }
}
