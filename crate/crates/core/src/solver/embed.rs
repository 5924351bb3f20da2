//! Real embedding of the complex tomography problem.
//!
//! Hermitian D×D matrices form a real vector space of dimension D². The
//! orthonormal coordinates used here are (diagonal entries, then
//! √2·Re χ_ij and √2·Im χ_ij for i<j), an isometry for the Frobenius
//! norm. Under these coordinates the data map becomes a real matrix
//! Ā = [Re ΦS; Im ΦS] acting on u ∈ R^{D²}, the trace-preservation
//! constraint becomes an affine equation T u = t, the PSD cone projects
//! via one Hermitian eigendecomposition, and ‖vec χ‖₁ splits into
//! per-coordinate and per-pair group norms with closed-form proximal
//! maps. Hermiticity holds by construction at every iterate.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bases::OperatorBasis;
use crate::error::Error;
use crate::linalg::{hermitian_eigen, hermitian_eigen_rows, ComplexMatrix, RealMatrix};
use crate::protocol::CoefficientMatrix;
use crate::Result;

/// Coordinate chart for Hermitian D×D matrices.
#[derive(Debug, Clone)]
pub struct HermitianCoords {
    side: usize,
    /// (i, j) with i < j, in row-major order; pair p occupies u-slots
    /// side + 2p (real part) and side + 2p + 1 (imaginary part).
    pairs: Vec<(usize, usize)>,
}

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

impl HermitianCoords {
    pub fn new(side: usize) -> Self {
        let mut pairs = Vec::with_capacity(side * (side - 1) / 2);
        for i in 0..side {
            for j in i + 1..side {
                pairs.push((i, j));
            }
        }
        Self { side, pairs }
    }

    /// Matrix side length D.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Real dimension D².
    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn to_matrix(&self, u: &[f64]) -> ComplexMatrix {
        assert_eq!(u.len(), self.len());
        let d = self.side;
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = Complex64::new(u[i], 0.0);
        }
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let re = u[d + 2 * p] / SQRT2;
            let im = u[d + 2 * p + 1] / SQRT2;
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = Complex64::new(re, -im);
        }
        m
    }

    /// Coordinates of the Hermitian part of `m`.
    pub fn from_matrix(&self, m: &ComplexMatrix) -> Vec<f64> {
        assert_eq!(m.rows(), self.side);
        let d = self.side;
        let mut u = vec![0.0; self.len()];
        for i in 0..d {
            u[i] = m[(i, i)].re;
        }
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let upper = m[(i, j)];
            let lower = m[(j, i)].conj();
            u[d + 2 * p] = SQRT2 * 0.5 * (upper.re + lower.re);
            u[d + 2 * p + 1] = SQRT2 * 0.5 * (upper.im + lower.im);
        }
        u
    }

    /// Entrywise modulus sum ‖vec χ‖₁ expressed in coordinates.
    pub fn l1_value(&self, u: &[f64]) -> f64 {
        let d = self.side;
        let diag: f64 = u[..d].iter().map(|v| v.abs()).sum();
        let off: f64 = self
            .pairs
            .iter()
            .enumerate()
            .map(|(p, _)| u[d + 2 * p].hypot(u[d + 2 * p + 1]))
            .sum();
        diag + SQRT2 * off
    }

    /// Proximal map of τ·‖vec χ‖₁: scalar soft-threshold at τ on the
    /// diagonal, group soft-threshold at √2·τ on each off-diagonal pair
    /// (equivalently, complex soft-threshold at τ on every entry of χ).
    pub fn l1_prox(&self, u: &mut [f64], tau: f64) {
        let d = self.side;
        for v in u[..d].iter_mut() {
            *v = v.signum() * (v.abs() - tau).max(0.0);
        }
        let group = SQRT2 * tau;
        for p in 0..self.pairs.len() {
            let a = u[d + 2 * p];
            let b = u[d + 2 * p + 1];
            let norm = a.hypot(b);
            let scale = if norm > group { 1.0 - group / norm } else { 0.0 };
            u[d + 2 * p] = a * scale;
            u[d + 2 * p + 1] = b * scale;
        }
    }

    /// Projection onto the PSD cone; returns the smallest eigenvalue seen
    /// before clipping.
    pub fn psd_project(&self, u: &mut [f64]) -> f64 {
        let m = self.to_matrix(u);
        let (vals, rows) = hermitian_eigen_rows(&m);
        let min_eig = vals.first().copied().unwrap_or(0.0);
        if min_eig >= 0.0 {
            return min_eig;
        }
        let d = self.side;
        let mut clipped = vec![crate::linalg::ZERO; d * d];
        for (k, &lambda) in vals.iter().enumerate() {
            if lambda <= 0.0 {
                continue;
            }
            let vk = &rows[k * d..(k + 1) * d];
            for i in 0..d {
                let a = vk[i] * lambda;
                let out = &mut clipped[i * d..(i + 1) * d];
                for (oj, vj) in out.iter_mut().zip(vk) {
                    *oj += a * vj.conj();
                }
            }
        }
        let clipped = ComplexMatrix::new(d, d, clipped);
        u.copy_from_slice(&self.from_matrix(&clipped));
        min_eig
    }

    /// Smallest eigenvalue of χ(u).
    pub fn min_eigenvalue(&self, u: &[f64]) -> f64 {
        let (vals, _) = hermitian_eigen_rows(&self.to_matrix(u));
        vals.first().copied().unwrap_or(0.0)
    }
}

/// Builds the real data matrix Ā (2M × D⁴ real) from a complex Φ: real
/// parts of all rows stacked above imaginary parts, columns in Hermitian
/// coordinates. ‖Āu − b̄‖₂ equals ‖Φ vec χ − B‖₂ exactly.
pub fn real_data_matrix(phi: &CoefficientMatrix, coords: &HermitianCoords) -> RealMatrix {
    let d = coords.side();
    let n = coords.len();
    let m_rows = phi.rows();
    let inv_sqrt2 = 1.0 / SQRT2;
    let mut out = RealMatrix::zeros(2 * m_rows, n);

    // SAFETY-free parallelism: rows of `out` are disjoint; compute Re and
    // Im rows for the same complex row in one pass each.
    let re_part: Vec<Vec<f64>> = (0..m_rows)
        .into_par_iter()
        .map(|r| {
            let row = phi.row(r);
            let mut re = vec![0.0; n];
            let mut im = vec![0.0; n];
            for i in 0..d {
                let w = row[i * d + i];
                re[i] = w.re;
                im[i] = w.im;
            }
            for (p, &(i, j)) in coords.pairs().iter().enumerate() {
                let upper = row[j * d + i]; // coefficient multiplying χ_ij
                let lower = row[i * d + j]; // coefficient multiplying χ_ji
                let wre = (upper + lower) * inv_sqrt2;
                let wim = (upper - lower) * Complex64::new(0.0, 1.0) * inv_sqrt2;
                re[d + 2 * p] = wre.re;
                im[d + 2 * p] = wre.im;
                re[d + 2 * p + 1] = wim.re;
                im[d + 2 * p + 1] = wim.im;
            }
            re.extend(im);
            re
        })
        .collect();
    for (r, both) in re_part.into_iter().enumerate() {
        out.row_mut(r).copy_from_slice(&both[..n]);
        out.row_mut(m_rows + r).copy_from_slice(&both[n..]);
    }
    out
}

/// Real right-hand side [Re B; Im B].
pub fn real_data_vector(values: &[Complex64]) -> Vec<f64> {
    let mut b = Vec::with_capacity(2 * values.len());
    b.extend(values.iter().map(|z| z.re));
    b.extend(values.iter().map(|z| z.im));
    b
}

/// Affine trace-preservation constraint T u = t, where T maps Hermitian
/// coordinates of χ to Hermitian coordinates of Σ χ_mn E_m†E_n and t
/// encodes I_d. Projection uses the pseudo-inverse of T Tᵀ.
#[derive(Debug, Clone)]
pub struct TpProjector {
    t_mat: RealMatrix,
    /// Pseudo-inverse of T Tᵀ (d² × d²).
    w: RealMatrix,
    target: Vec<f64>,
}

impl TpProjector {
    pub fn new(basis: &OperatorBasis, coords: &HermitianCoords) -> Result<Self> {
        let d = basis.dim();
        let small = HermitianCoords::new(d);
        let rows = small.len();
        let n = coords.len();
        assert_eq!(basis.len(), coords.side());

        let mut t_mat = RealMatrix::zeros(rows, n);
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let g = tp_column_matrix(basis, coords, k);
                small.from_matrix(&g)
            })
            .collect();
        for (k, col) in cols.into_iter().enumerate() {
            for (r, v) in col.into_iter().enumerate() {
                t_mat.set(r, k, v);
            }
        }
        let target = small.from_matrix(&ComplexMatrix::identity(d));

        // pinv(T Tᵀ) via eigendecomposition of the small Gramian
        let tt = t_mat.gram_t();
        let mut tt_c = ComplexMatrix::zeros(rows, rows);
        for i in 0..rows {
            for j in 0..rows {
                tt_c[(i, j)] = Complex64::new(tt.get(i, j), 0.0);
            }
        }
        let (vals, vecs) = hermitian_eigen(&tt_c);
        let top = vals.last().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Err(Error::FactorizationFailure);
        }
        let cutoff = top * 1e-12;
        let mut w = RealMatrix::zeros(rows, rows);
        for i in 0..rows {
            for j in 0..rows {
                let mut acc = 0.0;
                for (k, &lambda) in vals.iter().enumerate() {
                    if lambda > cutoff {
                        acc += vecs[(i, k)].re * vecs[(j, k)].re / lambda;
                    }
                }
                w.set(i, j, acc);
            }
        }
        let projector = Self { t_mat, w, target };

        // the affine set must be reachable: T (T⁺ t) = t
        let mut probe = vec![0.0; n];
        projector.project(&mut probe);
        if projector.residual(&probe) > 1e-8 * (1.0 + crate::linalg::norm2(&projector.target)) {
            return Err(Error::FactorizationFailure);
        }
        Ok(projector)
    }

    /// u ← u − Tᵀ (T Tᵀ)⁺ (T u − t)
    pub fn project(&self, u: &mut [f64]) {
        let mut r = self.t_mat.matvec(u);
        for (ri, ti) in r.iter_mut().zip(&self.target) {
            *ri -= ti;
        }
        let y = self.w.matvec(&r);
        let correction = self.t_mat.matvec_t(&y);
        for (ui, ci) in u.iter_mut().zip(&correction) {
            *ui -= ci;
        }
    }

    /// ‖T u − t‖₂, equal to the Frobenius residual ‖Σχ_mn E_m†E_n − I‖_F.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let r = self.t_mat.matvec(u);
        r.iter()
            .zip(&self.target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// G-matrix of one coordinate direction: Σ_{mn} (H_k)_{mn} E_m†E_n for the
/// k-th Hermitian basis element H_k.
fn tp_column_matrix(basis: &OperatorBasis, coords: &HermitianCoords, k: usize) -> ComplexMatrix {
    let side = coords.side();
    let inv_sqrt2 = 1.0 / SQRT2;
    if k < side {
        let e = basis.element(k);
        e.dagger().matmul(e)
    } else {
        let p = (k - side) / 2;
        let (i, j) = coords.pairs()[p];
        let eij = basis.element(i).dagger().matmul(basis.element(j));
        let eji = basis.element(j).dagger().matmul(basis.element(i));
        if (k - side) % 2 == 0 {
            eij.add(&eji).scale(Complex64::new(inv_sqrt2, 0.0))
        } else {
            eij.sub(&eji).scale(Complex64::new(0.0, inv_sqrt2))
        }
    }
}

/// Projection of `v` onto the l2 ball of radius `eps` around `center`
/// (the singleton {center} when eps = 0).
pub fn ball_project(v: &mut [f64], center: &[f64], eps: f64) {
    debug_assert_eq!(v.len(), center.len());
    let dist_sq: f64 = v
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let dist = dist_sq.sqrt();
    if dist <= eps {
        return;
    }
    if eps == 0.0 {
        v.copy_from_slice(center);
        return;
    }
    let scale = eps / dist;
    for (vi, ci) in v.iter_mut().zip(center) {
        *vi = ci + (*vi - ci) * scale;
    }
}
