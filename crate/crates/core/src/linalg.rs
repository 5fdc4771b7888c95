//! Small fixed-capacity vectors and square matrices.
//!
//! Everything in this crate lives in dimension at most [`MAX_DIM`], so points,
//! frame components and Jacobians are stored inline and are `Copy`. This keeps
//! the quadrature inner loops free of heap traffic.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 4;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    data: [f64; MAX_DIM],
    dim: usize,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "dimension {dim} exceeds MAX_DIM");
        Self {
            data: [0.0; MAX_DIM],
            dim,
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut v = Self::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    /// The `i`-th standard basis vector.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v[i] = 1.0;
        v
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        let mut v = Self::zeros(dim);
        v.data[..dim].fill(value);
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.as_slice().iter()
    }

    /// Last coordinate; the height `x_n` in the half-space chart.
    #[inline]
    pub fn last(&self) -> f64 {
        self.data[self.dim - 1]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.data[i] * other.data[i];
        }
        s
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: f64) -> Vector {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        let mut out = *self;
        for x in out.as_mut_slice() {
            *x = f(*x);
        }
        out
    }

    /// First `k` components.
    pub fn head(&self, k: usize) -> Vector {
        assert!(k <= self.dim);
        Vector::from_slice(&self.data[..k])
    }

    /// Appends one component.
    pub fn push(&self, value: f64) -> Vector {
        let mut out = Vector::zeros(self.dim + 1);
        out.data[..self.dim].copy_from_slice(self.as_slice());
        out.data[self.dim] = value;
        out
    }

    /// Drops component `i`.
    pub fn remove(&self, i: usize) -> Vector {
        let mut out = Vector::zeros(self.dim - 1);
        let mut k = 0;
        for j in 0..self.dim {
            if j != i {
                out.data[k] = self.data[j];
                k += 1;
            }
        }
        out
    }

    /// Inserts `value` so that it becomes component `i`.
    pub fn insert(&self, i: usize, value: f64) -> Vector {
        let mut out = Vector::zeros(self.dim + 1);
        let mut k = 0;
        for j in 0..=self.dim {
            if j == i {
                out.data[j] = value;
            } else {
                out.data[j] = self.data[k];
                k += 1;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(values: [f64; N]) -> Self {
        Vector::from_slice(&values)
    }
}

impl From<&[f64]> for Vector {
    fn from(values: &[f64]) -> Self {
        Vector::from_slice(values)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(values: Vec<f64>) -> Self {
        Vector::from_slice(&values)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        debug_assert!(i < self.dim);
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        debug_assert!(i < self.dim);
        &mut self.data[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(mut self, rhs: Vector) -> Vector {
        self += rhs;
        self
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] += rhs.data[i];
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(mut self, rhs: Vector) -> Vector {
        self -= rhs;
        self
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] -= rhs.data[i];
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

/// Square matrix of size `dim`; entry `(i, j)` is row `i`, column `j`.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    data: [[f64; MAX_DIM]; MAX_DIM],
    dim: usize,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM);
        Self {
            data: [[0.0; MAX_DIM]; MAX_DIM],
            dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    /// `u vᵀ`.
    pub fn outer(u: &Vector, v: &Vector) -> Self {
        Self::from_fn(u.dim(), |i, j| u[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> Vector {
        Vector::from_slice(&self.data[i][..self.dim])
    }

    pub fn column(&self, j: usize) -> Vector {
        let mut v = Vector::zeros(self.dim);
        for i in 0..self.dim {
            v[i] = self.data[i][j];
        }
        v
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.data[j][i])
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.data[i][j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn mul_mat(&self, other: &Matrix) -> Matrix {
        Self::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.data[i][k] * other.data[k][j]).sum()
        })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Self::from_fn(self.dim, |i, j| self.data[i][j] * s)
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        Self::from_fn(self.dim, |i, j| self.data[i][j] + other.data[i][j])
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.data[i][j] * self.data[i][j];
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.data[i][j].abs());
            }
        }
        m
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.dim).map(|i| &self.data[i][..self.dim]).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i][j]
    }
}

/// Determinant of a small dense matrix given as rows (Gaussian elimination
/// with partial pivoting). Used for Gram determinants of rectangular maps.
pub fn determinant(rows: &mut [Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
            .unwrap();
        if rows[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            rows.swap(pivot, col);
            det = -det;
        }
        det *= rows[col][col];
        for r in col + 1..n {
            let factor = rows[r][col] / rows[col][col];
            for c in col..n {
                rows[r][c] -= factor * rows[col][c];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_remove_are_inverse() {
        let v = Vector::from([1.0, 2.0, 3.0]);
        let w = v.remove(1);
        assert_eq!(w.as_slice(), &[1.0, 3.0]);
        assert_eq!(w.insert(1, 2.0), v);
        assert_eq!(v.head(2).push(3.0), v);
    }

    #[test]
    fn determinant_of_permuted_diagonal() {
        let mut rows = vec![vec![0.0, 2.0, 0.0], vec![3.0, 0.0, 0.0], vec![0.0, 0.0, 4.0]];
        assert_eq!(determinant(&mut rows), -24.0);
    }

    #[test]
    fn outer_product_trace_is_dot() {
        let u = Vector::from([1.0, -2.0, 0.5]);
        let v = Vector::from([3.0, 1.0, 2.0]);
        assert_eq!(Matrix::outer(&u, &v).trace(), u.dot(&v));
    }
}
