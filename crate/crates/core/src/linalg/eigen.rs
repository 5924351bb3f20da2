//! Hermitian eigendecomposition.
//!
//! Householder reduction to real symmetric tridiagonal form (with the
//! complex subdiagonal phases absorbed into the accumulated transform),
//! followed by the implicit-shift QL iteration. This is the classic
//! EISPACK htridi/tql2 pairing. The hot call sites are 16×16 and 64×64
//! positive-semidefinite projections inside the solver, so the inner
//! loops run on contiguous slices and the eigenvector accumulator is
//! kept row-major (one row per eigenvector) to make the QL plane
//! rotations cache-friendly.

use num_complex::Complex64;

use super::{ComplexMatrix, ONE, ZERO};

/// Eigendecomposition with eigenvectors as *rows* of a flat row-major
/// buffer (row k of the result is the eigenvector of `values[k]`).
/// Eigenvalues ascend. The input is symmetrized first, so small
/// Hermiticity violations from roundoff are tolerated.
pub fn hermitian_eigen_rows(a: &ComplexMatrix) -> (Vec<f64>, Vec<Complex64>) {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    // symmetrized working copy, flat row-major
    let mut m: Vec<Complex64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            m.push((a[(i, j)] + a[(j, i)].conj()) * 0.5);
        }
    }
    // vt row r = eigenvector r (starts as identity = rows of Qᵀ...
    // accumulation below keeps vt = Qᵀ, i.e. vt[j] is column j of Q)
    let mut vt = vec![ZERO; n * n];
    for i in 0..n {
        vt[i * n + i] = ONE;
    }

    let mut v = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    let mut qv = vec![ZERO; n];

    // Householder reduction; after step k, column k holds its final
    // tridiagonal entries.
    for k in 0..n.saturating_sub(2) {
        let nb = n - k - 1;
        let mut xnorm_sq = 0.0;
        for i in k + 1..n {
            xnorm_sq += m[i * n + k].norm_sqr();
        }
        let xnorm = xnorm_sq.sqrt();
        if xnorm < 1e-300 {
            continue;
        }
        let x0 = m[(k + 1) * n + k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;

        for i in 0..nb {
            v[i] = m[(k + 1 + i) * n + k];
        }
        v[0] -= alpha;
        let vnorm_sq: f64 = v[..nb].iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq < 1e-300 {
            continue;
        }
        let beta = 2.0 / vnorm_sq;

        // w = beta * B v over the trailing block
        for i in 0..nb {
            let row = &m[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let mut acc = ZERO;
            for (bij, vj) in row.iter().zip(&v[..nb]) {
                acc += bij * vj;
            }
            w[i] = acc * beta;
        }
        let vw: Complex64 = v[..nb]
            .iter()
            .zip(&w[..nb])
            .map(|(vi, wi)| vi.conj() * wi)
            .sum();
        let mu = vw * (beta / 2.0);
        for i in 0..nb {
            qv[i] = w[i] - mu * v[i];
        }
        // B <- B - q v† - v q†
        for i in 0..nb {
            let qi = qv[i];
            let vi = v[i];
            let row = &mut m[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..nb {
                row[j] -= qi * v[j].conj() + vi * qv[j].conj();
            }
        }
        // collapse column/row k
        m[(k + 1) * n + k] = alpha;
        m[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            m[i * n + k] = ZERO;
            m[k * n + i] = ZERO;
        }
        // accumulate the transform: vt holds Qᵀ (rows are columns of Q),
        // so Q <- Q H becomes, for each original row r of Q, a contiguous
        // pass over the affected vt entries... rows of Q are columns of
        // vt; operate instead on vt rows: (Q H)ᵀ = Hᵀ Qᵀ mixes vt *rows*
        // k+1.. with coefficients conj pattern:
        //   Qᵀ <- Qᵀ - beta conj(v) (vᵀ Qᵀ)
        // i.e. t = beta · Σ_j v[j]·vt_row[k+1+j]; vt_row[k+1+i] -= conj(v[i])·t
        {
            let mut t = vec![ZERO; n];
            for (j, vj) in v[..nb].iter().enumerate() {
                let row = &vt[(k + 1 + j) * n..(k + 2 + j) * n];
                for (ti, ri) in t.iter_mut().zip(row) {
                    *ti += vj * ri;
                }
            }
            for ti in t.iter_mut() {
                *ti *= beta;
            }
            for i in 0..nb {
                let ci = v[i].conj();
                let row = &mut vt[(k + 1 + i) * n..(k + 2 + i) * n];
                for (ri, ti) in row.iter_mut().zip(&t) {
                    *ri -= ci * ti;
                }
            }
        }
    }

    // absorb subdiagonal phases so the tridiagonal matrix is real;
    // vt row j picks up the phase of column j of Q
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut u = ONE;
    for i in 0..n {
        d[i] = m[i * n + i].re;
    }
    for i in 0..n - 1 {
        let b = m[(i + 1) * n + i];
        let mag = b.norm();
        e[i] = mag;
        if mag > 0.0 {
            u *= b / mag;
        }
        // conj: vt holds Qᵀ, so scaling column j of Q by u scales vt row j
        // by u as well (rows of vt are columns of Q, transposed not
        // conjugated)
        if u != ONE {
            for z in vt[(i + 1) * n..(i + 2) * n].iter_mut() {
                *z *= u;
            }
        }
    }

    tql2(&mut d, &mut e, &mut vt, n);

    // sort ascending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let mut dsorted = vec![0.0; n];
    let mut vsorted = vec![ZERO; n * n];
    for (new, &old) in order.iter().enumerate() {
        dsorted[new] = d[old];
        vsorted[new * n..(new + 1) * n].copy_from_slice(&vt[old * n..(old + 1) * n]);
    }
    (dsorted, vsorted)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the unitary of eigenvectors
/// (column `j` belongs to eigenvalue `j`).
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.rows();
    let (vals, rows) = hermitian_eigen_rows(a);
    let mut vecs = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            vecs[(i, k)] = rows[k * n + i];
        }
    }
    (vals, vecs)
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix; plane
/// rotations are applied to rows i and i+1 of the row-major eigenvector
/// buffer (one contiguous pass per rotation).
fn tql2(d: &mut [f64], e: &mut [f64], vt: &mut [Complex64], n: usize) {
    if n <= 1 {
        return;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 64, "tridiagonal QL failed to converge");

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // rotate eigenvector rows i and i+1
                let (head, tail) = vt.split_at_mut((i + 1) * n);
                let row_i = &mut head[i * n..];
                let row_i1 = &mut tail[..n];
                for (a, b2) in row_i.iter_mut().zip(row_i1.iter_mut()) {
                    f = b2.re;
                    let fi = b2.im;
                    let vre = a.re;
                    let vim = a.im;
                    *b2 = Complex64::new(s * vre + c * f, s * vim + c * fi);
                    *a = Complex64::new(c * vre - s * f, c * vim - s * fi);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}
