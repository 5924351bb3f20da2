//! Operator bases for the χ-matrix representation.
//!
//! Two families are used: the Pauli basis (PB), tensor products of
//! {I, σx, σy, σz}, and the Pauli-error basis (PEB) built from a target
//! unitary U as E_i = U·P_i. Both satisfy the Hilbert–Schmidt
//! orthogonality Tr(E_α† E_β) = d·δ_αβ.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{ComplexMatrix, I, ONE, ZERO};
use crate::Result;

pub const UNITARY_TOL: f64 = 1e-10;

/// σx
pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]])
}

/// σy
pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
}

/// σz
pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]])
}

/// Single-qubit Pauli by index in the fixed order I < X < Y < Z.
pub fn single_pauli(idx: usize) -> ComplexMatrix {
    match idx {
        0 => ComplexMatrix::identity(2),
        1 => sigma_x(),
        2 => sigma_y(),
        3 => sigma_z(),
        _ => panic!("Pauli index must be 0..4"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// Standard Pauli basis {I, σx, σy, σz}^⊗n.
    Pauli,
    /// Pauli-error basis {U·P_i} for a target unitary U.
    PauliError,
}

impl BasisKind {
    pub fn label(&self) -> &'static str {
        match self {
            BasisKind::Pauli => "PB",
            BasisKind::PauliError => "PEB",
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PB" | "PAULI" => Ok(BasisKind::Pauli),
            "PEB" | "PAULI-ERROR" | "PAULIERROR" => Ok(BasisKind::PauliError),
            other => Err(Error::OutOfRange(format!("unknown basis '{other}'"))),
        }
    }
}

/// Ordered set of d² operators with Tr(E_α†E_β) = d·δ_αβ.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    n_qubits: usize,
    elements: Vec<ComplexMatrix>,
    kind: BasisKind,
    /// Source unitary when `kind` is `PauliError`.
    unitary: Option<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension d = 2^n.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of basis elements, d².
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, idx: usize) -> &ComplexMatrix {
        &self.elements[idx]
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn unitary(&self) -> Option<&ComplexMatrix> {
        self.unitary.as_ref()
    }

    /// Largest deviation from Tr(E_α†E_β) = d·δ_αβ over all pairs.
    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.dim() as f64;
        let mut worst = 0.0f64;
        for (a, ea) in self.elements.iter().enumerate() {
            for (b, eb) in self.elements.iter().enumerate() {
                let inner = ea.hs_inner(eb);
                let expect = if a == b { d } else { 0.0 };
                worst = worst.max((inner - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }
}

/// Tensor-product Pauli basis in lexicographic order (I < X < Y < Z per
/// qubit, leftmost qubit most significant). Element 0 is the identity.
pub fn pauli_basis(n_qubits: usize) -> OperatorBasis {
    assert!(n_qubits >= 1, "need at least one qubit");
    let count = 1usize << (2 * n_qubits);
    let mut elements = Vec::with_capacity(count);
    for idx in 0..count {
        let mut m = single_pauli((idx >> (2 * (n_qubits - 1))) & 3);
        for q in 1..n_qubits {
            let digit = (idx >> (2 * (n_qubits - 1 - q))) & 3;
            m = m.kron(&single_pauli(digit));
        }
        elements.push(m);
    }
    OperatorBasis {
        n_qubits,
        elements,
        kind: BasisKind::Pauli,
        unitary: None,
    }
}

/// Pauli-error basis E_i = U·P_i in the same order as [`pauli_basis`].
///
/// The ideal process matrix of U expressed in this basis has a single
/// non-zero entry, which is what makes it the natural basis for sparse
/// recovery of a known target gate.
pub fn pauli_error_basis(u: &ComplexMatrix, n_qubits: usize) -> Result<OperatorBasis> {
    let d = 1usize << n_qubits;
    if u.rows() != d || u.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, expected {d}x{d}",
            u.rows(),
            u.cols()
        )));
    }
    u.check_unitary(UNITARY_TOL)?;
    let pb = pauli_basis(n_qubits);
    let elements = pb.elements.iter().map(|p| u.matmul(p)).collect();
    Ok(OperatorBasis {
        n_qubits,
        elements,
        kind: BasisKind::PauliError,
        unitary: Some(u.clone()),
    })
}

/// Builds the basis of `kind` for the target unitary `u`.
pub fn basis_for(kind: BasisKind, u: &ComplexMatrix, n_qubits: usize) -> Result<OperatorBasis> {
    match kind {
        BasisKind::Pauli => Ok(pauli_basis(n_qubits)),
        BasisKind::PauliError => pauli_error_basis(u, n_qubits),
    }
}
