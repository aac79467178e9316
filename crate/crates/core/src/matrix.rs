//! Dense row-major matrices and the two heavy kernels the pipeline needs:
//! the row Gram product `A·Aᵀ` and a Cholesky factorization.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Tile edge (rows/cols) for the blocked `A·Aᵀ` product.
const TILE: usize = 32;
/// Inner-dimension chunk for the blocked product.
const DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Validation(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Validation("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Sub-matrix with the given row and column indices, in that order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let r = self.row(i);
            data.extend(cols.iter().map(|&j| r[j]));
        }
        Matrix {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`, or `None` for non-square matrices.
    pub fn asymmetry(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    /// Symmetric within `rel_tol` of the largest entry.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry()
            .is_some_and(|a| a <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self · selfᵀ`, the Gram matrix of the rows.
    ///
    /// Blocked over output tiles and inner-dimension chunks. The blocking
    /// does not depend on the worker count, so every entry is summed in
    /// the same order under any [`Execution`].
    pub fn row_gram(&self, exec: Execution) -> Matrix {
        let n = self.rows;
        let k = self.cols;
        let mut out = Matrix::zeros(n, n);
        if n == 0 {
            return out;
        }
        // Upper-triangular tiles, one band of TILE output rows per work unit.
        exec::for_each_chunk_mut(exec, &mut out.data, TILE * n, |band, chunk| {
            let i0 = band * TILE;
            let i1 = (i0 + TILE).min(n);
            let mut j0 = i0;
            while j0 < n {
                let j1 = (j0 + TILE).min(n);
                let mut k0 = 0;
                while k0 < k {
                    let k1 = (k0 + DEPTH).min(k);
                    for i in i0..i1 {
                        let a = &self.row(i)[k0..k1];
                        let out_row = &mut chunk[(i - i0) * n..(i - i0 + 1) * n];
                        for (j, o) in out_row.iter_mut().enumerate().take(j1).skip(j0.max(i)) {
                            *o += dot(a, &self.row(j)[k0..k1]);
                        }
                    }
                    k0 = k1;
                }
                j0 = j1;
            }
        });
        for i in 0..n {
            for j in 0..i {
                out.data[i * n + j] = out.data[j * n + i];
            }
        }
        out
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Validation(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with four interleaved accumulators (fixed order).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Approximate multiply-adds per parallel task in the factorization.
const CHOLESKY_TASK_WORK: usize = 16 * 1024;

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix. Only the lower
    /// triangle of `a` is read.
    ///
    /// Column by column; the sub-diagonal entries of each column are
    /// independent and are filled in parallel, each with a fixed-order
    /// dot product.
    pub fn factor(a: &Matrix, exec: Execution) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Validation(format!(
                "cannot factor a {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut l = Matrix::zeros(n, n);
        let mut pivot_row = vec![0.0; n];
        let (mut min_pivot, mut max_pivot) = (f64::INFINITY, 0.0f64);
        for j in 0..n {
            let lj = &l.data[j * n..j * n + j];
            let d = a[(j, j)] - dot(lj, lj);
            if d <= 0.0 || !d.is_finite() {
                let diag = a.diagonal();
                let dmax = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite: pivot {j} of {n} is {d:e} \
                     (largest diagonal {dmax:e}, pivot range so far {min_pivot:e}..{max_pivot:e})"
                )));
            }
            let ljj = d.sqrt();
            min_pivot = min_pivot.min(d);
            max_pivot = max_pivot.max(d);
            l.data[j * n + j] = ljj;
            pivot_row[..j].copy_from_slice(&l.data[j * n..j * n + j]);
            let pj = &pivot_row[..j];
            let below = &mut l.data[(j + 1) * n..];
            // Rows are independent, so the grouping does not affect results.
            let rows_per_task = (CHOLESKY_TASK_WORK / (j + 1)).max(1);
            exec::for_each_chunk_mut(exec, below, rows_per_task * n, |t, rows| {
                for (r, row) in rows.chunks_exact_mut(n).enumerate() {
                    let i = j + 1 + t * rows_per_task + r;
                    row[j] = (a[(i, j)] - dot(&row[..j], pj)) / ljj;
                }
            });
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    pub fn factor_matrix(&self) -> &Matrix {
        &self.l
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.l;
        // L·y = b
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = (b[i] - dot(&l.row(i)[..i], &y[..i])) / l[(i, i)];
        }
        // Lᵀ·x = y
        let mut x = y;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    }
}
