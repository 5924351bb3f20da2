//! Real dense matrices backing the solver's normal-equation work.
//!
//! Every parallel kernel here accumulates floating-point sums in a fixed
//! order (chunked maps combined sequentially by chunk index), so results
//! are bit-identical across runs and thread counts. That property is what
//! makes seeded sweeps reproduce byte-identical output files.

use rayon::prelude::*;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// y = A x, parallel over rows (sequential when the work is too small
    /// to amortize the fork).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        if self.rows * self.cols < 1 << 17 {
            for (r, out) in y.iter_mut().enumerate() {
                *out = dot(self.row(r), x);
            }
        } else {
            y.par_iter_mut().enumerate().for_each(|(r, out)| {
                *out = dot(self.row(r), x);
            });
        }
        y
    }

    /// y = Aᵀ x. Row chunks produce partial results that are combined in
    /// chunk order, keeping the accumulation deterministic.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        if self.rows * self.cols < 1 << 17 {
            let mut y = vec![0.0; self.cols];
            for (w, row) in x.iter().zip(self.data.chunks_exact(self.cols)) {
                if *w != 0.0 {
                    axpy(&mut y, *w, row);
                }
            }
            return y;
        }
        let chunk = 512usize;
        let partials: Vec<Vec<f64>> = self
            .data
            .par_chunks(chunk * self.cols)
            .enumerate()
            .map(|(ci, block)| {
                let base = ci * chunk;
                let mut acc = vec![0.0; self.cols];
                for (local, row) in block.chunks_exact(self.cols).enumerate() {
                    let w = x[base + local];
                    if w != 0.0 {
                        axpy(&mut acc, w, row);
                    }
                }
                acc
            })
            .collect();
        let mut y = vec![0.0; self.cols];
        for p in partials {
            for (yi, pi) in y.iter_mut().zip(p) {
                *yi += pi;
            }
        }
        y
    }

    /// Gram matrix AᵀA (cols × cols).
    ///
    /// Streams the rows in fixed-size blocks; each block is transposed into
    /// a scratch buffer so the inner products run over contiguous memory.
    pub fn gram(&self) -> RealMatrix {
        let n = self.cols;
        let block = 256usize;
        let mut g = RealMatrix::zeros(n, n);
        let mut scratch = vec![0.0; n * block];
        let mut r0 = 0;
        while r0 < self.rows {
            let len = block.min(self.rows - r0);
            for (local, row) in self.data[r0 * n..(r0 + len) * n]
                .chunks_exact(n)
                .enumerate()
            {
                for (j, &v) in row.iter().enumerate() {
                    scratch[j * block + local] = v;
                }
            }
            let scratch_ref = &scratch;
            g.data
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(i, grow)| {
                    let a = &scratch_ref[i * block..i * block + len];
                    for j in i..n {
                        let b = &scratch_ref[j * block..j * block + len];
                        grow[j] += dot(a, b);
                    }
                });
            r0 += len;
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    /// A Aᵀ (rows × rows); used for the small-system (Woodbury) solve path.
    pub fn gram_t(&self) -> RealMatrix {
        let r = self.rows;
        let mut g = RealMatrix::zeros(r, r);
        g.data.par_chunks_mut(r).enumerate().for_each(|(i, grow)| {
            let a = self.row(i);
            for j in i..r {
                grow[j] = dot(a, self.row(j));
            }
        });
        for i in 0..r {
            for j in 0..i {
                g.data[i * r + j] = g.data[j * r + i];
            }
        }
        g
    }
}

/// Dot product with four independent accumulators for instruction-level
/// parallelism; the combine order is fixed.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 8;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..chunks {
        let i = k * 8;
        s0 += a[i] * b[i] + a[i + 4] * b[i + 4];
        s1 += a[i + 1] * b[i + 1] + a[i + 5] * b[i + 5];
        s2 += a[i + 2] * b[i + 2] + a[i + 6] * b[i + 6];
        s3 += a[i + 3] * b[i + 3] + a[i + 7] * b[i + 7];
    }
    let mut tail = 0.0;
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

/// y += alpha * x
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Cholesky factorization A = L Lᵀ of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: RealMatrix,
}

impl Cholesky {
    /// Returns `None` when a pivot drops below a scaled floor, i.e. the
    /// matrix is not numerically positive definite.
    pub fn new(a: &RealMatrix) -> Option<Self> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let mut l = a.clone();
        let scale = (0..n).map(|i| a.get(i, i)).fold(0.0f64, f64::max);
        let floor = scale * 1e-14 + 1e-300;
        for j in 0..n {
            let (head, tail) = l.data.split_at_mut((j + 1) * n);
            let rowj = &mut head[j * n..j * n + n];
            let piv = rowj[j] - dot(&rowj[..j], &rowj[..j]);
            if piv <= floor {
                return None;
            }
            let ljj = piv.sqrt();
            rowj[j] = ljj;
            for k in j + 1..n {
                rowj[k] = 0.0;
            }
            let rowj = &head[j * n..j * n + j];
            tail.par_chunks_mut(n).for_each(|rowi| {
                rowi[j] = (rowi[j] - dot(&rowi[..j], rowj)) / ljj;
            });
        }
        Some(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves A x = b in place (forward then backward substitution).
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.l.rows();
        assert_eq!(x.len(), n);
        // L y = b
        for i in 0..n {
            let row = self.l.row(i);
            x[i] = (x[i] - dot(&row[..i], &x[..i])) / row[i];
        }
        // Lᵀ z = y, streaming rows of L
        for k in (0..n).rev() {
            let row = self.l.row(k);
            x[k] /= row[k];
            let xk = x[k];
            for i in 0..k {
                x[i] -= xk * row[i];
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
