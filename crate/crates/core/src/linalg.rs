//! Small dense linear algebra: just enough for slack-reduced susceptance
//! systems, WLS normal equations, and nullspace extraction. Row-major `f64`
//! storage; partial-pivoting LU. Systems here are tiny (tens of rows), so
//! dense O(n^3) factorizations are the robust choice.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Absolute pivot threshold below which a matrix is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    /// Pivot fell below tolerance during factorization.
    Singular { at: usize },
    /// Operand shapes do not match.
    Shape,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular { at } => write!(f, "singular matrix (pivot {at} below tolerance)"),
            LinalgError::Shape => write!(f, "dimension mismatch"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LinalgError {}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec shape");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// y = A^T x
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec shape");
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for (j, a) in row.iter().enumerate() {
                y[j] += a * xi;
            }
        }
        y
    }

    /// C = A B
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut c = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let crow = c.row_mut(i);
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += a * bv;
                }
            }
        }
        c
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting (PA = LU, factors packed in-place).
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

pub fn lu_factor(a: &Matrix) -> Result<Lu, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::Shape);
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // Pick the largest pivot in column k at or below the diagonal.
        let mut p = k;
        let mut best = abs(lu[(k, k)]);
        for r in k + 1..n {
            let v = abs(lu[(r, k)]);
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < SINGULAR_TOL {
            return Err(LinalgError::Singular { at: k });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let f = lu[(r, k)] / pivot;
            lu[(r, k)] = f;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(r, j)] -= f * v;
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n, "rhs length");
        // Forward substitution on the permuted rhs.
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[self.perm[i]];
            for j in 0..i {
                acc -= self.lu[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        // Back substitution.
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }
}

/// Solve A x = b once.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(lu_factor(a)?.solve(b))
}

/// Dense inverse via LU (used for the contingency sensitivity matrix).
pub fn invert(a: &Matrix) -> Result<Matrix, LinalgError> {
    let n = a.rows;
    let lu = lu_factor(a)?;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Basis of the nullspace of A (columns of the returned vectors span
/// {x : Ax = 0}), computed by Gauss-Jordan elimination with partial pivoting.
/// `tol` is relative to the largest absolute entry of A.
pub fn nullspace(a: &Matrix, tol: f64) -> Vec<Vec<f64>> {
    let (m, n) = (a.rows, a.cols);
    if n == 0 {
        return Vec::new();
    }
    let scale = a.data.iter().fold(0.0f64, |acc, &v| if abs(v) > acc { abs(v) } else { acc });
    if scale == 0.0 {
        // Zero matrix: every coordinate is free.
        return (0..n)
            .map(|j| {
                let mut v = vec![0.0; n];
                v[j] = 1.0;
                v
            })
            .collect();
    }
    let eps = tol * scale;
    let mut r = a.clone();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..n {
        if row == m {
            break;
        }
        // Largest entry in this column at or below `row`.
        let mut p = row;
        let mut best = abs(r[(row, col)]);
        for i in row + 1..m {
            let v = abs(r[(i, col)]);
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= eps {
            continue; // free column
        }
        if p != row {
            for j in 0..n {
                let tmp = r[(row, j)];
                r[(row, j)] = r[(p, j)];
                r[(p, j)] = tmp;
            }
        }
        // Normalize and eliminate the column everywhere else (Gauss-Jordan).
        let piv = r[(row, col)];
        for j in 0..n {
            r[(row, j)] /= piv;
        }
        for i in 0..m {
            if i == row {
                continue;
            }
            let f = r[(i, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                let v = r[(row, j)];
                r[(i, j)] -= f * v;
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let pivot_set: Vec<bool> = {
        let mut s = vec![false; n];
        for &c in &pivot_cols {
            s[c] = true;
        }
        s
    };
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_set[free] {
            continue;
        }
        let mut v = vec![0.0; n];
        v[free] = 1.0;
        for (pr, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -r[(pr, free)];
        }
        basis.push(v);
    }
    basis
}

/// Rank of A under the same relative tolerance as `nullspace`.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    a.cols() - nullspace(a, tol).len()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

#[inline]
pub fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}
