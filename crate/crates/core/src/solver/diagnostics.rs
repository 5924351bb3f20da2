//! Compressed-sensing diagnostics: sampled restricted-isometry estimates
//! and the sample-size bound.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::Error;
use crate::protocol::CoefficientMatrix;
use crate::seeding;
use crate::Result;

/// Sampled lower bound on the restricted-isometry constant δ_s.
///
/// Draws `trials` random pairs of s-sparse complex vectors, evaluates the
/// ratio ‖Φ(χ₁−χ₂)‖² / ‖χ₁−χ₂‖² and returns the largest deviation from
/// one. The exact constant maximizes over all supports, which is
/// combinatorial; the sampled statistic is a reproducible lower bound.
/// With `normalize_columns` the ratio is evaluated for the
/// column-normalized matrix.
pub fn rip_estimate(
    phi: &CoefficientMatrix,
    s: usize,
    trials: usize,
    seed: u64,
    normalize_columns: bool,
) -> Result<f64> {
    if s < 1 || s > phi.cols() {
        return Err(Error::OutOfRange(format!(
            "sparsity {s} for {} columns",
            phi.cols()
        )));
    }
    if trials < 1 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let scales: Vec<f64> = if normalize_columns {
        phi.column_norms()
            .into_iter()
            .map(|n| if n > 1e-300 { 1.0 / n } else { 1.0 })
            .collect()
    } else {
        vec![1.0; phi.cols()]
    };

    let worst = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeding::stream(seed, seeding::purpose::RIP, trial as u64, 0);
            let mut sparse = Vec::with_capacity(2 * s);
            for sign in [1.0f64, -1.0] {
                let support = rand::seq::index::sample(&mut rng, phi.cols(), s);
                for idx in support {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    sparse.push((idx, Complex64::new(sign * re, sign * im)));
                }
            }
            // merge duplicate indices of χ₁ − χ₂
            sparse.sort_by_key(|&(idx, _)| idx);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(sparse.len());
            for (idx, v) in sparse {
                match merged.last_mut() {
                    Some((last, acc)) if *last == idx => *acc += v,
                    _ => merged.push((idx, v)),
                }
            }
            let denom: f64 = merged.iter().map(|(_, v)| v.norm_sqr()).sum();
            if denom < 1e-300 {
                return 0.0;
            }
            let mut numer = 0.0;
            for r in 0..phi.rows() {
                let row = phi.row(r);
                let mut acc = Complex64::new(0.0, 0.0);
                for &(idx, v) in &merged {
                    acc += row[idx] * scales[idx] * v;
                }
                numer += acc.norm_sqr();
            }
            (numer / denom - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Sample-size bound m_conf = ⌈C₀ · s · ln(d⁴/s)⌉ for sparsity s in a
/// d-dimensional Hilbert space.
pub fn sample_size_bound(s: usize, d: usize, c0: f64) -> Result<usize> {
    let d4 = d
        .checked_pow(4)
        .ok_or_else(|| Error::OutOfRange(format!("dimension {d} overflows d^4")))?;
    if s < 1 || s > d4 {
        return Err(Error::OutOfRange(format!("sparsity {s} outside 1..={d4}")));
    }
    if !(c0 > 0.0) {
        return Err(Error::OutOfRange(format!("C0 = {c0} must be positive")));
    }
    let value = c0 * s as f64 * ((d4 as f64) / (s as f64)).ln();
    Ok(value.ceil().max(0.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ComplexMatrix, ONE};
    use crate::protocol::Configuration;

    fn identity_phi(n: usize, scale: f64) -> CoefficientMatrix {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = ONE * scale;
        }
        let labels = (0..n)
            .map(|i| Configuration {
                state_index: i,
                rotation_index: 0,
                element_index: 0,
            })
            .collect();
        CoefficientMatrix::from_parts(n, n, data, labels)
    }

    #[test]
    fn identity_matrix_is_an_exact_isometry() {
        let phi = identity_phi(32, 1.0);
        let delta = rip_estimate(&phi, 4, 200, 1, false).unwrap();
        assert!(delta < 1e-12);
    }

    #[test]
    fn scaled_identity_deviates_by_three() {
        let phi = identity_phi(32, 2.0);
        let delta = rip_estimate(&phi, 4, 200, 1, false).unwrap();
        assert!((delta - 3.0).abs() < 1e-12);
        // column normalization restores the isometry
        let delta_n = rip_estimate(&phi, 4, 200, 1, true).unwrap();
        assert!(delta_n < 1e-12);
    }

    #[test]
    fn estimate_is_seed_reproducible() {
        let mut data = Vec::new();
        for i in 0..24usize {
            for j in 0..16usize {
                data.push(Complex64::new(
                    ((i * 7 + j * 3) % 5) as f64 - 2.0,
                    ((i + j) % 3) as f64 - 1.0,
                ));
            }
        }
        let labels = (0..24)
            .map(|i| Configuration {
                state_index: i,
                rotation_index: 0,
                element_index: 0,
            })
            .collect();
        let phi = CoefficientMatrix::from_parts(24, 16, data, labels);
        let a = rip_estimate(&phi, 3, 500, 9, true).unwrap();
        let b = rip_estimate(&phi, 3, 500, 9, true).unwrap();
        assert_eq!(a, b);
        let c = rip_estimate(&phi, 3, 500, 10, true).unwrap();
        assert_ne!(a, c);
        let _ = ComplexMatrix::identity(2);
    }

    #[test]
    fn rip_rejects_bad_arguments() {
        let phi = identity_phi(8, 1.0);
        assert!(rip_estimate(&phi, 0, 10, 1, false).is_err());
        assert!(rip_estimate(&phi, 9, 10, 1, false).is_err());
        assert!(rip_estimate(&phi, 2, 0, 1, false).is_err());
    }

    #[test]
    fn sample_size_bound_examples() {
        assert_eq!(sample_size_bound(1, 4, 1.0).unwrap(), 6);
        assert_eq!(sample_size_bound(256, 4, 1.0).unwrap(), 0);
        assert_eq!(sample_size_bound(16, 4, 1.0).unwrap(), 45);
        assert!(sample_size_bound(0, 4, 1.0).is_err());
        assert!(sample_size_bound(257, 4, 1.0).is_err());
        assert!(sample_size_bound(4, 4, 0.0).is_err());
    }
}
