//! Dense complex linear algebra for desk-scale Hermitian problems.
//!
//! Everything here is a pure function of its inputs. Matrices are stored
//! row-major in a flat `Vec<Complex64>`.

mod eigen;
mod factor;

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

pub use eigen::{
    generalized_eigen, generalized_eigenvalues, hermitian_eigen, hermitian_eigen_with,
    hermitian_eigenvalues, inertia, EigenDecomposition, EigenMethod, Inertia,
};
pub use factor::{cholesky, is_positive_definite, lu_solve, sylvester_inertia, Lu};

/// Absolute tolerance on `|H[i][j] - conj(H[j][i])|` accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max asymmetry {max_asymmetry:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { max_asymmetry: f64, tolerance: f64 },
    #[error("matrix is not positive definite: pivot {pivot} is {value:.3e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular to working precision at column {column}")]
    Singular { column: usize },
    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// A general dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self, LinalgError> {
        Self::from_row_major(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[Complex64]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, s: Complex64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self + other * s`, in place.
    pub fn add_scaled_assign(&mut self, other: &Matrix, s: Complex64) -> Result<(), LinalgError> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest `|M[i][j] - conj(M[j][i])|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `‖M*M − I‖_F`, the unitarity defect of a square matrix.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.adjoint().matmul(self).expect("square");
        gram.sub(&Matrix::identity(self.rows)).expect("same shape").frobenius_norm()
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let v = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction checks the invariant to [`HERMITIAN_TOL`] and then stores the
/// exactly Hermitian part, so downstream algorithms never see drift.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: Matrix,
}

impl HermitianMatrix {
    pub fn new(matrix: Matrix) -> Result<Self, LinalgError> {
        Self::with_tolerance(matrix, HERMITIAN_TOL)
    }

    /// Like [`HermitianMatrix::new`] with a caller-chosen asymmetry bound.
    pub fn with_tolerance(matrix: Matrix, tolerance: f64) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::DimensionMismatch { expected: matrix.rows, found: matrix.cols });
        }
        if !matrix.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let max_asymmetry = matrix.max_asymmetry();
        if max_asymmetry > tolerance {
            return Err(LinalgError::NotHermitian { max_asymmetry, tolerance });
        }
        Ok(Self::hermitize(matrix))
    }

    /// Replaces `M` by `(M + M*)/2` without checking.
    pub fn hermitize(mut matrix: Matrix) -> Self {
        let n = matrix.rows;
        for i in 0..n {
            let d = matrix[(i, i)];
            matrix[(i, i)] = Complex64::new(d.re, 0.0);
            for j in (i + 1)..n {
                let avg = (matrix[(i, j)] + matrix[(j, i)].conj()) * 0.5;
                matrix[(i, j)] = avg;
                matrix[(j, i)] = avg.conj();
            }
        }
        Self { inner: matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { inner: Matrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: Matrix::identity(dim) }
    }

    pub fn from_real_diagonal(values: &[f64]) -> Self {
        let diag: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self { inner: Matrix::diagonal(&diag) }
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self, LinalgError> {
        Self::new(Matrix::from_real(dim, dim, data)?)
    }

    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        Self { inner: self.inner.scale(Complex64::new(s, 0.0)) }
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<HermitianMatrix, LinalgError> {
        Ok(Self { inner: self.inner.add(&other.inner)? })
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Result<HermitianMatrix, LinalgError> {
        Ok(Self { inner: self.inner.sub(&other.inner)? })
    }

    pub fn add_scaled_assign(&mut self, other: &HermitianMatrix, s: f64) -> Result<(), LinalgError> {
        self.inner.add_scaled_assign(&other.inner, Complex64::new(s, 0.0))
    }

    /// `x* H x`, real up to rounding.
    pub fn quadratic_form(&self, x: &[Complex64]) -> Result<f64, LinalgError> {
        let hx = self.inner.matvec(x)?;
        Ok(x.iter().zip(&hx).map(|(a, b)| a.conj() * b).sum::<Complex64>().re)
    }

    /// `X* H X` for a matrix `X` whose columns span a subspace.
    pub fn congruence(&self, x: &Matrix) -> Result<HermitianMatrix, LinalgError> {
        let hx = self.inner.matmul(x)?;
        Ok(Self::hermitize(x.adjoint().matmul(&hx)?))
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.inner)
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_asymmetric_input_with_reported_asymmetry() {
        let m = Matrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.5, 0.0), c(1.0, 0.0)]).unwrap();
        match HermitianMatrix::new(m) {
            Err(LinalgError::NotHermitian { max_asymmetry, .. }) => assert!((max_asymmetry - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_complex_diagonal() {
        let m = Matrix::diagonal(&[c(1.0, 1e-6)]);
        assert!(matches!(HermitianMatrix::new(m), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn hermitize_removes_sub_tolerance_drift() {
        let m = Matrix::from_row_major(2, 2, vec![c(1.0, 1e-14), c(0.0, 1.0), c(0.0, -1.0 + 1e-13), c(2.0, 0.0)]).unwrap();
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h.as_matrix().max_asymmetry(), 0.0);
        assert_eq!(h.get(0, 0).im, 0.0);
    }

    #[test]
    fn congruence_matches_quadratic_form() {
        let h = HermitianMatrix::from_real(2, &[2.0, 1.0, 1.0, 3.0]).unwrap();
        let x = Matrix::from_row_major(2, 1, vec![c(1.0, 1.0), c(0.0, -2.0)]).unwrap();
        let small = h.congruence(&x).unwrap();
        let q = h.quadratic_form(&x.column(0)).unwrap();
        assert!((small.get(0, 0).re - q).abs() < 1e-12);
    }
}
