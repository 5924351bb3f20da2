//! Gate library: the two- and three-qubit unitaries characterized by the
//! workbench, plus the diagonal spin Hamiltonian generating them.
//!
//! Conventions: qubit indices are 0-based with qubit 0 the leftmost
//! (most significant) tensor factor; I_z = diag(1/2, −1/2); rotations are
//! R_a(θ) = exp(−iθσ_a/2).

use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{ComplexMatrix, ONE, ZERO};
use crate::Result;

use std::f64::consts::PI;

/// Single-qubit rotation about x: exp(−iθσx/2).
pub fn rx(theta: f64) -> ComplexMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    ComplexMatrix::from_rows(&[
        vec![Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
        vec![Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
    ])
}

/// Single-qubit rotation about y: exp(−iθσy/2).
pub fn ry(theta: f64) -> ComplexMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    ComplexMatrix::from_rows(&[
        vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ])
}

/// Single-qubit rotation about z: exp(−iθσz/2).
pub fn rz(theta: f64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![Complex64::new(0.0, -theta / 2.0).exp(), ZERO],
        vec![ZERO, Complex64::new(0.0, theta / 2.0).exp()],
    ])
}

/// Embeds a single-qubit operator at position `qubit` of an n-qubit register.
pub fn embed_single(op: &ComplexMatrix, qubit: usize, n_qubits: usize) -> ComplexMatrix {
    assert!(qubit < n_qubits);
    let mut m = if qubit == 0 {
        op.clone()
    } else {
        ComplexMatrix::identity(2)
    };
    for q in 1..n_qubits {
        if q == qubit {
            m = m.kron(op);
        } else {
            m = m.kron(&ComplexMatrix::identity(2));
        }
    }
    m
}

/// CNOT with qubit 0 as control and qubit 1 as target.
pub fn gate_cnot() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        vec![ONE, ZERO, ZERO, ZERO],
        vec![ZERO, ONE, ZERO, ZERO],
        vec![ZERO, ZERO, ZERO, ONE],
        vec![ZERO, ZERO, ONE, ZERO],
    ])
}

/// Controlled x-rotation: applies R_x(θ) to qubit 1 when qubit 0 is |1⟩.
pub fn gate_controlled_rx(theta: f64) -> ComplexMatrix {
    let r = rx(theta);
    let mut m = ComplexMatrix::identity(4);
    for i in 0..2 {
        for j in 0..2 {
            m[(2 + i, 2 + j)] = r[(i, j)];
        }
    }
    m
}

/// CNOT embedded in `n_qubits` with arbitrary control/target positions.
pub fn gate_cnot_between(control: usize, target: usize, n_qubits: usize) -> ComplexMatrix {
    assert!(control != target && control < n_qubits && target < n_qubits);
    let dim = 1usize << n_qubits;
    let mut m = ComplexMatrix::zeros(dim, dim);
    let cbit = n_qubits - 1 - control;
    let tbit = n_qubits - 1 - target;
    for col in 0..dim {
        let row = if (col >> cbit) & 1 == 1 { col ^ (1 << tbit) } else { col };
        m[(row, col)] = ONE;
    }
    m
}

/// Controlled-NOT-NOT: CNOT(0→2) · CNOT(0→1) on three qubits.
pub fn gate_cnn() -> ComplexMatrix {
    gate_cnot_between(0, 2, 3).matmul(&gate_cnot_between(0, 1, 3))
}

/// ±1/2 eigenvalue of I_z for the given basis state and qubit.
fn spin_z(state: usize, qubit: usize, n_qubits: usize) -> f64 {
    if (state >> (n_qubits - 1 - qubit)) & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// Two-body J-coupling evolution exp(−i 2π J I_iz I_jz t) embedded in the
/// full 2^n-dimensional space.
pub fn gate_jcoupling(i: usize, j: usize, coupling_hz: f64, t: f64, n_qubits: usize) -> Result<ComplexMatrix> {
    if i == j || i >= n_qubits || j >= n_qubits {
        return Err(Error::IndexOutOfRange(format!(
            "J-coupling qubits ({i},{j}) for {n_qubits} qubits"
        )));
    }
    let dim = 1usize << n_qubits;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for b in 0..dim {
        let phase = -2.0 * PI * coupling_hz * t * spin_z(b, i, n_qubits) * spin_z(b, j, n_qubits);
        m[(b, b)] = Complex64::new(0.0, phase).exp();
    }
    Ok(m)
}

/// Internal spin Hamiltonian H = −Σ νᵢ I_iz + Σ_{i<j} J_ij I_iz I_jz
/// (frequencies in Hz; the diagonal form makes every evolution operator a
/// diagonal phase matrix).
#[derive(Debug, Clone)]
pub struct InternalHamiltonian {
    n_qubits: usize,
    chemical_shifts_hz: Vec<f64>,
    couplings_hz: Vec<(usize, usize, f64)>,
}

impl InternalHamiltonian {
    pub fn new(
        chemical_shifts_hz: Vec<f64>,
        couplings_hz: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        let n_qubits = chemical_shifts_hz.len();
        let mut seen = std::collections::HashSet::new();
        for &(i, j, _) in &couplings_hz {
            if i == j {
                return Err(Error::OutOfRange(format!("self-coupling on qubit {i}")));
            }
            if i >= n_qubits || j >= n_qubits {
                return Err(Error::IndexOutOfRange(format!(
                    "coupling pair ({i},{j}) for {n_qubits} qubits"
                )));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::OutOfRange(format!("duplicate coupling pair {key:?}")));
            }
        }
        Ok(Self {
            n_qubits,
            chemical_shifts_hz,
            couplings_hz,
        })
    }

    /// On-resonance (ν = 0) Hamiltonian with the given pair couplings.
    pub fn on_resonance(n_qubits: usize, couplings_hz: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::new(vec![0.0; n_qubits], couplings_hz)
    }

    /// Three-spin register with couplings typical of a ¹H/¹⁹F/¹³C molecule;
    /// the default system behind the `uj*` and `refocused*` gates.
    pub fn default_three_qubit() -> Self {
        Self::on_resonance(3, vec![(0, 1, 47.6), (0, 2, 161.6), (1, 2, -191.5)]).unwrap()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn chemical_shifts_hz(&self) -> &[f64] {
        &self.chemical_shifts_hz
    }

    /// Coupling J_ij in Hz; zero when the pair is absent.
    pub fn coupling_hz(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.couplings_hz
            .iter()
            .find(|&&(a, b, _)| (a.min(b), a.max(b)) == key)
            .map_or(0.0, |&(_, _, v)| v)
    }

    /// Diagonal energy (Hz) of computational basis state `b`.
    fn level_hz(&self, b: usize) -> f64 {
        let n = self.n_qubits;
        let mut h = 0.0;
        for (q, nu) in self.chemical_shifts_hz.iter().enumerate() {
            h -= nu * spin_z(b, q, n);
        }
        for &(i, j, jij) in &self.couplings_hz {
            h += jij * spin_z(b, i, n) * spin_z(b, j, n);
        }
        h
    }
}

/// Free evolution exp(−i 2π H t) under the internal Hamiltonian.
pub fn evolve_internal(h: &InternalHamiltonian, t: f64) -> ComplexMatrix {
    let dim = 1usize << h.n_qubits;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for b in 0..dim {
        m[(b, b)] = Complex64::new(0.0, -2.0 * PI * h.level_hz(b) * t).exp();
    }
    m
}

/// Refocused two-body evolution on qubits (i, j) of a three-spin system:
/// U_int(t/2) · Rx^k(π) · U_int(t/2) · Rx^k(−π).
///
/// The π sandwich on the spectator k inverts its I_z for half the period,
/// cancelling the J_ik and J_jk phases; with zero chemical shifts the
/// result equals `gate_jcoupling(i, j, J_ij, t, 3)` up to global phase.
pub fn gate_refocused_evolution(
    i: usize,
    j: usize,
    k: usize,
    h: &InternalHamiltonian,
    t: f64,
) -> Result<ComplexMatrix> {
    if h.n_qubits != 3 {
        return Err(Error::UnsupportedSize(h.n_qubits, "3"));
    }
    if i == j || i == k || j == k || i >= 3 || j >= 3 || k >= 3 {
        return Err(Error::IndexOutOfRange(format!(
            "refocusing indices ({i},{j},{k}) must be a permutation of 0..3"
        )));
    }
    let half = evolve_internal(h, t / 2.0);
    let pulse_pos = embed_single(&rx(PI), k, 3);
    let pulse_neg = embed_single(&rx(-PI), k, 3);
    Ok(half.matmul(&pulse_pos).matmul(&half).matmul(&pulse_neg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cnot_truth_table() {
        let cnot = gate_cnot();
        // |10⟩ -> |11⟩
        let ket10 = ComplexMatrix::basis_ket(4, 2);
        let out = cnot.matmul(&ket10);
        assert!(out.approx_eq(&ComplexMatrix::basis_ket(4, 3), 1e-15));
        assert!(cnot.unitarity_residual() <= 1e-10);
    }

    #[test]
    fn cnn_fires_both_targets() {
        let cnn = gate_cnn();
        // |100⟩ -> |111⟩
        let out = cnn.matmul(&ComplexMatrix::basis_ket(8, 4));
        assert!(out.approx_eq(&ComplexMatrix::basis_ket(8, 7), 1e-15));
        // |000⟩ unchanged
        let out0 = cnn.matmul(&ComplexMatrix::basis_ket(8, 0));
        assert!(out0.approx_eq(&ComplexMatrix::basis_ket(8, 0), 1e-15));
        assert!(cnn.unitarity_residual() <= 1e-10);
    }

    #[test]
    fn controlled_rx_pi_is_cnot_times_phase_on_block() {
        let crx = gate_controlled_rx(PI);
        // Rx(π) = −i σx, so the controlled block carries a −i phase.
        let mut expected = ComplexMatrix::identity(4);
        expected[(2, 2)] = ZERO;
        expected[(3, 3)] = ZERO;
        expected[(2, 3)] = Complex64::new(0.0, -1.0);
        expected[(3, 2)] = Complex64::new(0.0, -1.0);
        assert!(crx.approx_eq(&expected, 1e-12));
    }

    #[test]
    fn jcoupling_zero_time_is_identity() {
        let u = gate_jcoupling(0, 1, 100.0, 0.0, 2).unwrap();
        assert!(u.approx_eq(&ComplexMatrix::identity(4), 1e-15));
    }

    #[test]
    fn jcoupling_half_period_phases() {
        let j = 215.0;
        let u = gate_jcoupling(0, 1, j, 1.0 / (2.0 * j), 2).unwrap();
        let p = |sign: f64| Complex64::new(0.0, sign * PI / 4.0).exp();
        let expected = ComplexMatrix::from_rows(&[
            vec![p(-1.0), ZERO, ZERO, ZERO],
            vec![ZERO, p(1.0), ZERO, ZERO],
            vec![ZERO, ZERO, p(1.0), ZERO],
            vec![ZERO, ZERO, ZERO, p(-1.0)],
        ]);
        assert!(u.approx_eq(&expected, 1e-12));
    }

    #[test]
    fn jcoupling_rejects_bad_indices() {
        assert!(gate_jcoupling(0, 0, 1.0, 1.0, 2).is_err());
        assert!(gate_jcoupling(0, 2, 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn evolve_trivial_hamiltonian_is_identity() {
        let h = InternalHamiltonian::on_resonance(2, vec![]).unwrap();
        let u = evolve_internal(&h, 3.7);
        assert!(u.approx_eq(&ComplexMatrix::identity(4), 1e-15));
    }

    #[test]
    fn evolve_single_pair_matches_jcoupling() {
        let h = InternalHamiltonian::on_resonance(2, vec![(0, 1, 123.4)]).unwrap();
        for &t in &[1e-4, 3e-3, 0.011] {
            let a = evolve_internal(&h, t);
            let b = gate_jcoupling(0, 1, 123.4, t, 2).unwrap();
            assert!(a.approx_eq(&b, 1e-12));
        }
    }

    #[test]
    fn evolve_three_qubit_sums_pairwise_phases() {
        let h = InternalHamiltonian::default_three_qubit();
        let t = 2.3e-3;
        let u = evolve_internal(&h, t);
        for b in 0..8usize {
            let s = |q: usize| if (b >> (2 - q)) & 1 == 0 { 0.5 } else { -0.5 };
            let phase = -2.0
                * PI
                * t
                * (47.6 * s(0) * s(1) + 161.6 * s(0) * s(2) - 191.5 * s(1) * s(2));
            let expected = Complex64::new(0.0, phase).exp();
            assert!((u[(b, b)] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn refocused_zero_time_is_identity() {
        let h = InternalHamiltonian::default_three_qubit();
        let u = gate_refocused_evolution(0, 1, 2, &h, 0.0).unwrap();
        assert!(u.approx_eq(&ComplexMatrix::identity(8), 1e-12));
    }

    #[test]
    fn refocusing_cancels_spectator_couplings() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let j01 = rng.gen_range(10.0..250.0);
            let j02 = rng.gen_range(10.0..250.0);
            let j12 = rng.gen_range(10.0..250.0);
            let h = InternalHamiltonian::on_resonance(
                3,
                vec![(0, 1, j01), (0, 2, j02), (1, 2, j12)],
            )
            .unwrap();
            let pairs = [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)];
            let (i, j, k) = pairs[rng.gen_range(0..3)];
            let t = rng.gen_range(1e-4..2e-2);
            let refocused = gate_refocused_evolution(i, j, k, &h, t).unwrap();
            let target = gate_jcoupling(i, j, h.coupling_hz(i, j), t, 3).unwrap();
            assert!(
                refocused.equal_up_to_phase(&target, 1e-10),
                "refocusing failed for pair ({i},{j}), spectator {k}"
            );
        }
    }

    #[test]
    fn refocused_half_period_matches_target_within_phase() {
        let h = InternalHamiltonian::default_three_qubit();
        let j01 = h.coupling_hz(0, 1);
        let t = 1.0 / (2.0 * j01);
        let refocused = gate_refocused_evolution(0, 1, 2, &h, t).unwrap();
        let target = gate_jcoupling(0, 1, j01, t, 3).unwrap();
        assert!(refocused.equal_up_to_phase(&target, 1e-10));
        assert!(refocused.unitarity_residual() <= 1e-10);
    }

    #[test]
    fn gate_library_outputs_are_unitary() {
        let h = InternalHamiltonian::default_three_qubit();
        let gates = vec![
            gate_cnot(),
            gate_controlled_rx(PI),
            gate_controlled_rx(0.77),
            gate_cnn(),
            gate_jcoupling(0, 1, 215.0, 1.0 / 430.0, 2).unwrap(),
            evolve_internal(&h, 1.3e-3),
            gate_refocused_evolution(1, 2, 0, &h, 2.1e-3).unwrap(),
        ];
        for g in gates {
            assert!(g.unitarity_residual() <= 1e-10);
        }
    }
}
