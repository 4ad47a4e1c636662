//! Dense complex linear algebra over `f64`.
//!
//! Vectors and matrices are plain row-major buffers of [`Complex64`]. The
//! only decomposition provided is the Hermitian eigendecomposition, which is
//! all the density-matrix code needs.

mod eigen;
mod polar;
mod svd;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};


pub use eigen::{hermitian_eig, matrix_function, EigenDecomposition, MAX_SWEEPS};
pub use num_complex::Complex64;
pub use polar::complex_add_polar;
pub use svd::singular_values;

use crate::error::{shape_err, Error, Result};

/// Complex scalar used throughout the crate.
pub type ComplexScalar = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// One-hot basis vector `e_index` of dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            data: values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Hermitian inner product `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &ComplexVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(shape_err(
                "inner",
                format!("dim {}", self.dim()),
                format!("dim {}", other.dim()),
            ));
        }
        Ok(inner_slices(&self.data, &other.data))
    }

    pub fn scale(&self, factor: Complex64) -> ComplexVector {
        ComplexVector {
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }
}

impl Index<usize> for ComplexVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.data[i]
    }
}

/// `sum_j conj(a_j) b_j`; slices must have equal length.
#[inline]
pub fn inner_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(shape_err(
                "from_vec",
                format!("{} elements", rows * cols),
                format!("{} elements", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from real rows; all rows must have the same length.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(shape_err("from_real_rows", format!("{cols} columns"), format!("{} columns", r.len())));
            }
            data.extend(r.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::from_vec(rows.len(), cols, data)
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

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector::new((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &ComplexMatrix) -> Result<f64> {
        self.check_same_shape("frobenius_distance", other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// `||A - A^dagger||_F`; errors for non-square input.
    pub fn hermitian_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(shape_err("hermitian_defect", "square matrix", format!("{}x{}", self.rows, self.cols)));
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape("add", other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape("sub", other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self += weight * |v><v|`.
    pub fn add_scaled_projector(&mut self, weight: f64, v: &[Complex64]) -> Result<()> {
        if !self.is_square() || self.rows != v.len() {
            return Err(shape_err(
                "add_scaled_projector",
                format!("{}x{} and dim {}", v.len(), v.len(), v.len()),
                format!("{}x{}", self.rows, self.cols),
            ));
        }
        let n = self.rows;
        for i in 0..n {
            let wi = v[i] * weight;
            let row = &mut self.data[i * n..(i + 1) * n];
            for (slot, vj) in row.iter_mut().zip(v) {
                *slot += wi * vj.conj();
            }
        }
        Ok(())
    }

    fn check_same_shape(&self, op: &'static str, other: &ComplexMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(shape_err(
                op,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Rank-one operator `|v><v|`.
pub fn outer_product(v: &ComplexVector) -> Result<ComplexMatrix> {
    let n = v.dim();
    if n == 0 {
        return Err(Error::Domain("outer product of an empty vector".into()));
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    Ok(m)
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(shape_err(
            "matmul",
            format!("lhs cols == rhs rows ({})", a.cols),
            format!("rhs rows {}", b.rows),
        ));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            let brow = b.row(k);
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

pub fn trace(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(shape_err("trace", "square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    Ok((0..a.rows).map(|i| a[(i, i)]).sum())
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.cols != b.rows || a.rows != b.cols {
        return Err(shape_err(
            "trace_of_product",
            format!("{}x{}", a.cols, a.rows),
            format!("{}x{}", b.rows, b.cols),
        ));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.rows {
        for k in 0..a.cols {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn outer_product_of_basis_state() {
        let p = outer_product(&ComplexVector::basis(2, 0)).unwrap();
        assert_eq!(p, ComplexMatrix::from_diag(&[1.0, 0.0]));
    }

    #[test]
    fn outer_product_hand_expanded() {
        let v = ComplexVector::new(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]);
        let p = outer_product(&v).unwrap();
        let expect = [c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)];
        for (got, want) in p.as_slice().iter().zip(expect) {
            assert!((got - want).norm() < 1e-15);
        }
        assert!((trace(&p).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn outer_product_rejects_empty() {
        assert!(outer_product(&ComplexVector::zeros(0)).is_err());
    }

    #[test]
    fn pauli_x_squares_to_identity() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(matmul(&x, &x).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn matmul_shape_error() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn trace_identity_and_non_square() {
        assert_eq!(trace(&ComplexMatrix::identity(4)).unwrap(), c(4.0, 0.0));
        assert!(trace(&ComplexMatrix::zeros(2, 3)).is_err());
    }
}
