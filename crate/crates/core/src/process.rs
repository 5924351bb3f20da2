//! The χ process-matrix model.
//!
//! A completely positive map Λ is expanded in an operator basis {E_i} as
//! Λ(ρ) = Σ_{mn} χ_mn E_m ρ E_n†. For a unitary target the coefficients
//! come from c_k = Tr(E_k†U)/d and χ = c·c† is rank one with unit trace.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bases::{pauli_basis, pauli_error_basis, BasisKind, OperatorBasis};
use crate::error::Error;
use crate::gates::{rx, rz, embed_single, gate_cnot_between};
use crate::linalg::{hermitian_eigen, ComplexMatrix, ZERO};
use crate::Result;

/// Norm cutoff below which fidelity is undefined.
const ZERO_NORM_CUTOFF: f64 = 1e-14;

/// Process matrix χ together with the basis it is expressed in.
#[derive(Debug, Clone)]
pub struct ProcessMatrix {
    basis: Arc<OperatorBasis>,
    chi: ComplexMatrix,
}

impl ProcessMatrix {
    pub fn new(basis: Arc<OperatorBasis>, chi: ComplexMatrix) -> Result<Self> {
        let expected = basis.len();
        if chi.rows() != expected || chi.cols() != expected {
            return Err(Error::DimensionMismatch(format!(
                "chi is {}x{}, basis wants {expected}x{expected}",
                chi.rows(),
                chi.cols()
            )));
        }
        Ok(Self { basis, chi })
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    pub fn chi(&self) -> &ComplexMatrix {
        &self.chi
    }

    /// Hilbert-space dimension d.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Number of entries with modulus above `tol`.
    pub fn sparsity(&self, tol: f64) -> usize {
        assert!(tol > 0.0, "sparsity tolerance must be positive");
        self.chi.data().iter().filter(|z| z.norm() > tol).count()
    }

    /// Σ_{mn} χ_mn E_m† E_n, the matrix whose deviation from I_d measures
    /// trace-preservation.
    pub fn tp_matrix(&self) -> ComplexMatrix {
        let d = self.dim();
        let count = self.basis.len();
        let mut g = ComplexMatrix::zeros(d, d);
        for m in 0..count {
            // H_m = Σ_n χ_mn E_n
            let mut h = ComplexMatrix::zeros(d, d);
            for n in 0..count {
                let w = self.chi[(m, n)];
                if w != ZERO {
                    h = h.add(&self.basis.element(n).scale(w));
                }
            }
            g = g.add(&self.basis.element(m).dagger().matmul(&h));
        }
        g
    }

    /// ‖Σ χ_mn E_m†E_n − I‖_F.
    pub fn tp_residual(&self) -> f64 {
        let d = self.dim();
        self.tp_matrix()
            .sub(&ComplexMatrix::identity(d))
            .frobenius_norm()
    }

    /// Residual of the transposed-index form Σ χ_mn E_n†E_m = I. Both
    /// forms vanish for the processes this crate constructs; tests assert
    /// the two agree near feasible points.
    pub fn tp_residual_conventional(&self) -> f64 {
        let d = self.dim();
        let count = self.basis.len();
        let mut g = ComplexMatrix::zeros(d, d);
        for n in 0..count {
            let mut k = ComplexMatrix::zeros(d, d);
            for m in 0..count {
                let w = self.chi[(m, n)];
                if w != ZERO {
                    k = k.add(&self.basis.element(m).scale(w));
                }
            }
            g = g.add(&self.basis.element(n).dagger().matmul(&k));
        }
        g.sub(&ComplexMatrix::identity(d)).frobenius_norm()
    }

    /// Residual report: hermiticity, smallest eigenvalue of the hermitian
    /// part, and the trace-preservation deviation. The caller decides what
    /// passes.
    pub fn validity_report(&self) -> ValidityReport {
        let hermiticity = self.chi.hermiticity_residual();
        let (vals, _) = hermitian_eigen(&self.chi);
        let min_eigenvalue = vals.first().copied().unwrap_or(0.0);
        ValidityReport {
            hermiticity,
            min_eigenvalue,
            tp_residual: self.tp_residual(),
        }
    }

    /// Column-stacked χ with χ_mn at index n·d² + m.
    pub fn vectorize(&self) -> ChiVector {
        let count = self.basis.len();
        let mut values = vec![ZERO; count * count];
        for n in 0..count {
            for m in 0..count {
                values[n * count + m] = self.chi[(m, n)];
            }
        }
        ChiVector { values }
    }
}

/// Residuals from [`ProcessMatrix::validity_report`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidityReport {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
}

impl ValidityReport {
    pub fn passes(&self, psd_tol: f64, tp_tol: f64) -> bool {
        self.hermiticity <= 10.0 * tp_tol
            && self.min_eigenvalue >= -psd_tol
            && self.tp_residual <= tp_tol
    }
}

/// Column-stacked form of χ (length d⁴, index n·d² + m).
#[derive(Debug, Clone, PartialEq)]
pub struct ChiVector {
    values: Vec<Complex64>,
}

impl ChiVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Inverse of [`ProcessMatrix::vectorize`].
pub fn devectorize(v: &ChiVector, basis: Arc<OperatorBasis>) -> Result<ProcessMatrix> {
    let count = basis.len();
    if v.values.len() != count * count {
        return Err(Error::LengthMismatch {
            expected: count * count,
            got: v.values.len(),
        });
    }
    let mut chi = ComplexMatrix::zeros(count, count);
    for n in 0..count {
        for m in 0..count {
            chi[(m, n)] = v.values[n * count + m];
        }
    }
    ProcessMatrix::new(basis, chi)
}

/// Process matrix of a unitary gate: χ = c·c† with c_k = Tr(E_k†U)/d.
pub fn chi_from_unitary(u: &ComplexMatrix, basis: &Arc<OperatorBasis>) -> Result<ProcessMatrix> {
    let d = basis.dim();
    if u.rows() != d || u.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, basis dimension is {d}",
            u.rows(),
            u.cols()
        )));
    }
    u.check_unitary(crate::bases::UNITARY_TOL)?;
    let c: Vec<Complex64> = basis
        .elements()
        .iter()
        .map(|e| e.hs_inner(u) / d as f64)
        .collect();
    let count = basis.len();
    let mut chi = ComplexMatrix::zeros(count, count);
    for m in 0..count {
        for n in 0..count {
            chi[(m, n)] = c[m] * c[n].conj();
        }
    }
    ProcessMatrix::new(basis.clone(), chi)
}

/// Applies the map: Λ(ρ) = Σ_{mn} χ_mn E_m ρ E_n†.
pub fn apply_map(chi: &ProcessMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = chi.dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, expected {d}x{d}",
            rho.rows(),
            rho.cols()
        )));
    }
    let count = chi.basis.len();
    let mut out = ComplexMatrix::zeros(d, d);
    for m in 0..count {
        // F_m = Σ_n conj(χ_mn) E_n, so that Λ = Σ_m (E_m ρ) F_m†
        let mut f = ComplexMatrix::zeros(d, d);
        let mut any = false;
        for n in 0..count {
            let w = chi.chi[(m, n)].conj();
            if w != ZERO {
                f = f.add(&chi.basis.element(n).scale(w));
                any = true;
            }
        }
        if !any {
            continue;
        }
        let w = chi.basis.element(m).matmul(rho);
        out = out.add(&w.matmul(&f.dagger()));
    }
    Ok(out)
}

/// Normalized Hilbert–Schmidt overlap |Tr(χ_a χ_b†)| / √(Tr χ_a†χ_a · Tr χ_b†χ_b).
pub fn fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    if a.basis.len() != b.basis.len() || a.basis.kind() != b.basis.kind() {
        return Err(Error::DimensionMismatch(
            "fidelity requires matching bases".into(),
        ));
    }
    let na = a.chi.frobenius_norm();
    let nb = b.chi.frobenius_norm();
    if na < ZERO_NORM_CUTOFF || nb < ZERO_NORM_CUTOFF {
        return Err(Error::ZeroMatrix);
    }
    // Tr(χ_a χ_b†) = conj of Tr(χ_b† χ_a)
    let overlap = b.chi.hs_inner(&a.chi).norm();
    Ok(overlap / (na * nb))
}

/// Haar-like random unitary from layers of single-qubit rotations and
/// entangling CNOTs; adequate for generating test processes.
pub fn random_unitary(n_qubits: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let dim = 1usize << n_qubits;
    let mut u = ComplexMatrix::identity(dim);
    for layer in 0..3 {
        for q in 0..n_qubits {
            let g = rz(rng.gen_range(0.0..std::f64::consts::TAU))
                .matmul(&rx(rng.gen_range(0.0..std::f64::consts::TAU)))
                .matmul(&rz(rng.gen_range(0.0..std::f64::consts::TAU)));
            u = embed_single(&g, q, n_qubits).matmul(&u);
        }
        if n_qubits > 1 {
            let c = layer % n_qubits;
            let t = (layer + 1) % n_qubits;
            u = gate_cnot_between(c, t, n_qubits).matmul(&u);
        }
    }
    u
}

/// Random valid trace-preserving process: a convex mixture of unitary
/// channels expressed in `basis`.
pub fn random_tp_process(
    basis: &Arc<OperatorBasis>,
    terms: usize,
    rng: &mut impl Rng,
) -> ProcessMatrix {
    let n_qubits = basis.n_qubits();
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let count = basis.len();
    let mut chi = ComplexMatrix::zeros(count, count);
    for w in weights {
        let u = random_unitary(n_qubits, rng);
        let term = chi_from_unitary(&u, basis).unwrap();
        chi = chi.add(&term.chi.scale(Complex64::new(w, 0.0)));
    }
    ProcessMatrix::new(basis.clone(), chi).unwrap()
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ChiJson {
    n_qubits: usize,
    basis_kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    basis_unitary: Option<Vec<[f64; 2]>>,
    chi: Vec<[f64; 2]>,
}

fn to_pairs(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.data().iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(rows: usize, cols: usize, pairs: &[[f64; 2]]) -> Result<ComplexMatrix> {
    if pairs.len() != rows * cols {
        return Err(Error::LengthMismatch {
            expected: rows * cols,
            got: pairs.len(),
        });
    }
    Ok(ComplexMatrix::new(
        rows,
        cols,
        pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
    ))
}

impl ProcessMatrix {
    pub fn to_json(&self) -> Result<String> {
        let json = ChiJson {
            n_qubits: self.basis.n_qubits(),
            basis_kind: self.basis.kind().label().to_string(),
            basis_unitary: self.basis.unitary().map(to_pairs),
            chi: to_pairs(&self.chi),
        };
        Ok(serde_json::to_string_pretty(&json)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: ChiJson = serde_json::from_str(text)?;
        let d = 1usize << json.n_qubits;
        let kind: BasisKind = json.basis_kind.parse()?;
        let basis = match kind {
            BasisKind::Pauli => Arc::new(pauli_basis(json.n_qubits)),
            BasisKind::PauliError => {
                let pairs = json.basis_unitary.ok_or_else(|| {
                    Error::OutOfRange("PEB serialization requires basis_unitary".into())
                })?;
                let u = from_pairs(d, d, &pairs)?;
                Arc::new(pauli_error_basis(&u, json.n_qubits)?)
            }
        };
        let count = basis.len();
        let chi = from_pairs(count, count, &json.chi)?;
        ProcessMatrix::new(basis, chi)
    }
}
