//! Dense complex matrices and the small set of decompositions the
//! tomography pipeline needs.
//!
//! Matrices are stored row-major. Sizes in this crate are desk-scale
//! (Hilbert-space operators up to 8×8, process matrices up to 64×64,
//! coefficient matrices up to 5376×4096), so the kernels favour clarity
//! and deterministic accumulation order over BLAS-grade tuning.

mod eigen;
mod real;

pub use eigen::{hermitian_eigen, hermitian_eigen_rows};
pub use real::{axpy, dot, norm2, Cholesky, RealMatrix};

use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must match dimensions");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Build from a nested slice of rows; handy for literal gates in tests.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    /// Column vector |k⟩ of dimension `dim` as a dim×1 matrix.
    pub fn basis_ket(dim: usize, k: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        m[(k, 0)] = ONE;
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for j in 0..other.cols {
                    dst[j] += a * src[j];
                }
            }
        }
        out
    }

    /// Kronecker product; `self` indexes the most significant subsystem.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Hilbert–Schmidt inner product Tr(self† · other).
    pub fn hs_inner(&self, other: &Self) -> Complex64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise equality with an explicit absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.max_abs_diff(other) <= tol
    }

    /// ‖self† self − I‖_F, the unitarity residual.
    pub fn unitarity_residual(&self) -> f64 {
        assert!(self.is_square());
        self.dagger()
            .matmul(self)
            .sub(&Self::identity(self.rows))
            .frobenius_norm()
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let deviation = self.unitarity_residual();
        if deviation > tol {
            Err(Error::NonUnitary { deviation, tol })
        } else {
            Ok(())
        }
    }

    /// ‖self − self†‖_F.
    pub fn hermiticity_residual(&self) -> f64 {
        assert!(self.is_square());
        self.sub(&self.dagger()).frobenius_norm()
    }

    /// (self + self†)/2.
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.dagger()).scale(Complex64::new(0.5, 0.0))
    }

    /// Equality up to a global phase: |Tr(self† other)| / d == 1.
    pub fn equal_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        assert!(self.is_square() && other.is_square());
        let d = self.rows as f64;
        (self.hs_inner(other).norm() / d - 1.0).abs() <= tol
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Outer product |a⟩⟨b| of two column vectors.
pub fn outer(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.cols(), 1);
    assert_eq!(b.cols(), 1);
    let mut out = ComplexMatrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        for j in 0..b.rows() {
            out[(i, j)] = a[(i, 0)] * b[(j, 0)].conj();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_and_kron_agree_with_hand_computation() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(2.0, 0.0), c(0.0, 0.0)]]);
        let b = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
        let ab = a.matmul(&b);
        assert_eq!(ab[(0, 0)], c(0.0, 1.0));
        assert_eq!(ab[(0, 1)], c(1.0, 0.0));
        assert_eq!(ab[(1, 0)], c(0.0, 0.0));
        assert_eq!(ab[(1, 1)], c(2.0, 0.0));

        let k = a.kron(&ComplexMatrix::identity(2));
        assert_eq!(k.rows(), 4);
        assert_eq!(k[(0, 0)], c(1.0, 0.0));
        assert_eq!(k[(1, 1)], c(1.0, 0.0));
        assert_eq!(k[(0, 2)], c(0.0, 1.0));
        assert_eq!(k[(2, 0)], c(2.0, 0.0));
    }

    #[test]
    fn dagger_and_hs_inner() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(3.0, -1.0)], vec![c(0.0, 0.5), c(2.0, 0.0)]]);
        let ad = a.dagger();
        assert_eq!(ad[(0, 1)], c(0.0, -0.5));
        assert_eq!(ad[(1, 0)], c(3.0, 1.0));
        // Tr(A†A) = ‖A‖_F², real and positive.
        let n2 = a.hs_inner(&a);
        assert!((n2.im).abs() < 1e-15);
        assert!((n2.re - a.frobenius_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn unitarity_residual_flags_non_unitary() {
        let u = ComplexMatrix::identity(3);
        assert!(u.unitarity_residual() < 1e-15);
        let mut m = ComplexMatrix::identity(3);
        m[(0, 0)] = c(2.0, 0.0);
        assert!(m.check_unitary(1e-10).is_err());
    }

    #[test]
    fn outer_product_is_rank_one_projector() {
        let ket = ComplexMatrix::basis_ket(4, 2);
        let p = outer(&ket, &ket);
        assert_eq!(p[(2, 2)], ONE);
        assert!((p.trace() - ONE).norm() < 1e-15);
        assert!(p.matmul(&p).approx_eq(&p, 1e-15));
    }
}
