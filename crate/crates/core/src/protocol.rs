//! The tomography configuration space and the coefficient matrix Φ.
//!
//! A configuration is one (input state, tomographic rotation, readout
//! element) triple and yields one complex data point
//! B = Tr(M Λ(ρ)) = (R Λ(ρ) R†)_{kl}. Rows of Φ expand the same quantity
//! linearly in χ: Φ_{r,(m,n)} = Tr(M_r E_m ρ_r E_n†), with the column for
//! (m,n) at index n·d² + m to match the column-stacked χ vector.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::OperatorBasis;
use crate::error::Error;
use crate::linalg::{outer, ComplexMatrix, ZERO};
use crate::process::ChiVector;
use crate::Result;

/// One experimental setting, indexing into the owning [`TomographySpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub state_index: usize,
    pub rotation_index: usize,
    pub element_index: usize,
}

/// Tomographically complete configuration space for n qubits.
#[derive(Debug, Clone)]
pub struct TomographySpec {
    n_qubits: usize,
    input_states: Vec<ComplexMatrix>,
    rotations: Vec<ComplexMatrix>,
    /// Readout positions (row, col), 1-based as in the external format.
    readout_elements: Vec<(usize, usize)>,
}

/// Single-qubit input kets {|0⟩, |1⟩, |+⟩, |−⟩} with
/// |+⟩ = (|0⟩+|1⟩)/√2 and |−⟩ = (|0⟩+i|1⟩)/√2.
fn input_ket(digit: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match digit {
        0 => ComplexMatrix::basis_ket(2, 0),
        1 => ComplexMatrix::basis_ket(2, 1),
        2 => ComplexMatrix::new(2, 1, vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]),
        3 => ComplexMatrix::new(2, 1, vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)]),
        _ => unreachable!(),
    }
}

/// All 4^n product states of {|0⟩,|1⟩,|+⟩,|−⟩}, ordered by base-4 counting
/// with qubit 1 most significant and digit order (0, 1, +, −).
pub fn input_states(n_qubits: usize) -> Result<Vec<ComplexMatrix>> {
    if !(2..=3).contains(&n_qubits) {
        return Err(Error::UnsupportedSize(n_qubits, "2 or 3"));
    }
    let count = 1usize << (2 * n_qubits);
    let mut states = Vec::with_capacity(count);
    for idx in 0..count {
        let mut ket = input_ket((idx >> (2 * (n_qubits - 1))) & 3);
        for q in 1..n_qubits {
            let digit = (idx >> (2 * (n_qubits - 1 - q))) & 3;
            ket = ket.kron(&input_ket(digit));
        }
        states.push(outer(&ket, &ket));
    }
    Ok(states)
}

/// 90° rotation unitary for one letter of a rotation word; the sign
/// convention is fixed globally as exp(−iπσ/4).
fn rotation_letter(letter: u8) -> ComplexMatrix {
    match letter {
        b'I' => ComplexMatrix::identity(2),
        b'X' => crate::gates::rx(std::f64::consts::FRAC_PI_2),
        b'Y' => crate::gates::ry(std::f64::consts::FRAC_PI_2),
        _ => unreachable!("rotation letters are I, X, Y"),
    }
}

fn rotation_from_word(word: &str) -> ComplexMatrix {
    let mut it = word.bytes();
    let mut m = rotation_letter(it.next().expect("empty rotation word"));
    for letter in it {
        m = m.kron(&rotation_letter(letter));
    }
    m
}

/// Rotation words of the two fixed tomography sets.
pub fn rotation_words(n_qubits: usize) -> Result<&'static [&'static str]> {
    match n_qubits {
        2 => Ok(&["II", "IX", "IY", "XX"]),
        3 => Ok(&["III", "IIY", "IYY", "YII", "XYX", "XXY", "XXX"]),
        _ => Err(Error::UnsupportedSize(n_qubits, "2 or 3")),
    }
}

/// Tomographically complete rotation sets: {II, IX, IY, XX} for two qubits
/// and {III, IIY, IYY, YII, XYX, XXY, XXX} for three.
pub fn tomographic_rotations(n_qubits: usize) -> Result<Vec<ComplexMatrix>> {
    Ok(rotation_words(n_qubits)?
        .iter()
        .map(|w| rotation_from_word(w))
        .collect())
}

/// Readout positions of the rotated density matrix, 1-based (row, col),
/// concatenated per qubit. Each position is a single-quantum transition of
/// the qubit it belongs to: 2 per qubit for n=2, 4 per qubit for n=3.
pub fn readout_elements(n_qubits: usize) -> Result<Vec<(usize, usize)>> {
    match n_qubits {
        2 => Ok(vec![(2, 4), (1, 3), (3, 4), (1, 2)]),
        3 => Ok(vec![
            (4, 8),
            (2, 6),
            (3, 7),
            (1, 5),
            (5, 7),
            (1, 3),
            (6, 8),
            (2, 4),
            (5, 6),
            (1, 2),
            (7, 8),
            (3, 4),
        ]),
        _ => Err(Error::UnsupportedSize(n_qubits, "2 or 3")),
    }
}

impl TomographySpec {
    /// The full protocol for `n_qubits` ∈ {2, 3} with pure input states.
    pub fn standard(n_qubits: usize) -> Result<Self> {
        Ok(Self {
            n_qubits,
            input_states: input_states(n_qubits)?,
            rotations: tomographic_rotations(n_qubits)?,
            readout_elements: readout_elements(n_qubits)?,
        })
    }

    /// Standard protocol with every input prepared from a pseudo-pure
    /// state of purity η, i.e. ρ ↦ (1−η)I/d + ηρ.
    pub fn standard_with_pps(n_qubits: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::OutOfRange(format!("purity eta = {eta}")));
        }
        let mut spec = Self::standard(n_qubits)?;
        let d = spec.dim();
        let uniform = ComplexMatrix::identity(d).scale(Complex64::new((1.0 - eta) / d as f64, 0.0));
        for rho in &mut spec.input_states {
            *rho = uniform.add(&rho.scale(Complex64::new(eta, 0.0)));
        }
        Ok(spec)
    }

    /// Custom configuration space, mostly for synthetic problems in tests.
    /// Readout positions are 1-based.
    pub fn custom(
        n_qubits: usize,
        input_states: Vec<ComplexMatrix>,
        rotations: Vec<ComplexMatrix>,
        readout_elements: Vec<(usize, usize)>,
    ) -> Self {
        Self {
            n_qubits,
            input_states,
            rotations,
            readout_elements,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn input_states(&self) -> &[ComplexMatrix] {
        &self.input_states
    }

    pub fn rotations(&self) -> &[ComplexMatrix] {
        &self.rotations
    }

    pub fn readout_elements(&self) -> &[(usize, usize)] {
        &self.readout_elements
    }

    /// Number of complex data points in the full data set.
    pub fn data_size(&self) -> usize {
        self.input_states.len() * self.rotations.len() * self.readout_elements.len()
    }

    /// Row-order iterator: state-major, then rotation, then element.
    pub fn configurations(&self) -> Vec<Configuration> {
        let mut out = Vec::with_capacity(self.data_size());
        for state_index in 0..self.input_states.len() {
            for rotation_index in 0..self.rotations.len() {
                for element_index in 0..self.readout_elements.len() {
                    out.push(Configuration {
                        state_index,
                        rotation_index,
                        element_index,
                    });
                }
            }
        }
        out
    }

    pub fn row_index(&self, cfg: &Configuration) -> usize {
        (cfg.state_index * self.rotations.len() + cfg.rotation_index)
            * self.readout_elements.len()
            + cfg.element_index
    }

    /// Compact JSON descriptor for archiving next to results.
    pub fn descriptor(&self) -> SpecDescriptor {
        SpecDescriptor {
            n_qubits: self.n_qubits,
            input_state_count: self.input_states.len(),
            rotation_words: rotation_words(self.n_qubits)
                .map(|ws| ws.iter().map(|s| s.to_string()).collect())
                .unwrap_or_default(),
            readout_elements: self.readout_elements.clone(),
            data_size: self.data_size(),
        }
    }
}

/// Serializable summary of a [`TomographySpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecDescriptor {
    pub n_qubits: usize,
    pub input_state_count: usize,
    pub rotation_words: Vec<String>,
    /// 1-based (row, col) readout positions.
    pub readout_elements: Vec<(usize, usize)>,
    pub data_size: usize,
}

/// Measurement operator M = R†|l⟩⟨k|R, so that Tr(M X) = (R X R†)_{kl}
/// with 1-based (k, l).
pub fn measurement_operator(
    rotation: &ComplexMatrix,
    element: (usize, usize),
) -> Result<ComplexMatrix> {
    let d = rotation.rows();
    let (k, l) = element;
    if k < 1 || l < 1 || k > d || l > d {
        return Err(Error::IndexOutOfRange(format!(
            "readout element ({k},{l}) for dimension {d}"
        )));
    }
    let ket_l = ComplexMatrix::basis_ket(d, l - 1);
    let bra_k = ComplexMatrix::basis_ket(d, k - 1);
    Ok(rotation
        .dagger()
        .matmul(&outer(&ket_l, &bra_k))
        .matmul(rotation))
}

/// Coefficient matrix Φ with one row per configuration.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    rows: usize,
    cols: usize,
    /// Row-major complex entries.
    data: Vec<Complex64>,
    row_labels: Vec<Configuration>,
}

impl CoefficientMatrix {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        data: Vec<Complex64>,
        row_labels: Vec<Configuration>,
    ) -> Self {
        assert_eq!(data.len(), rows * cols);
        assert_eq!(row_labels.len(), rows);
        Self {
            rows,
            cols,
            data,
            row_labels,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_labels(&self) -> &[Configuration] {
        &self.row_labels
    }

    /// Φ · v for a column-stacked χ vector.
    pub fn apply(&self, v: &ChiVector) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok(self
            .data
            .par_chunks(self.cols)
            .map(|row| {
                row.iter()
                    .zip(v.values())
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect())
    }

    /// Selects the given rows (in the given order) into a smaller matrix.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            if r >= self.rows {
                return Err(Error::IndexOutOfRange(format!("row {r} of {}", self.rows)));
            }
            data.extend_from_slice(self.row(r));
            labels.push(self.row_labels[r]);
        }
        Ok(Self {
            rows: rows.len(),
            cols: self.cols,
            data,
            row_labels: labels,
        })
    }

    /// Per-column l2 norms; used by the column-normalized RIP diagnostic.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0f64; self.cols];
        for r in 0..self.rows {
            for (j, z) in self.row(r).iter().enumerate() {
                norms[j] += z.norm_sqr();
            }
        }
        norms.into_iter().map(f64::sqrt).collect()
    }

    /// Numerical rank from the eigenvalues of Φ†Φ (relative threshold on
    /// the largest eigenvalue).
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let n = self.cols;
        let mut gram = ComplexMatrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let a = row[i].conj();
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    gram[(i, j)] += a * row[j];
                }
            }
        }
        let (vals, _) = crate::linalg::hermitian_eigen(&gram);
        let top = vals.last().copied().unwrap_or(0.0).max(0.0);
        if top <= 0.0 {
            return 0;
        }
        vals.iter().filter(|&&v| v > rel_tol * top).count()
    }
}

/// Builds the full coefficient matrix for `spec` in `basis`.
///
/// Rows follow [`TomographySpec::configurations`]; the entry for basis pair
/// (m, n) sits at column n·d² + m. For fixed (ρ, R) the row entries are
/// Tr(M E_m ρ E_n†) = (R E_m ρ E_n† R†)_{kl} = Σ_c X_m[k,c]·conj(Y_n[l,c])
/// with X_m = R E_m ρ and Y_n = R E_n, which keeps the inner loop at d
/// multiplies per entry.
pub fn build_phi(spec: &TomographySpec, basis: &OperatorBasis) -> Result<CoefficientMatrix> {
    let d = spec.dim();
    if basis.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "basis dimension {} does not match spec dimension {d}",
            basis.dim()
        )));
    }
    for rho in spec.input_states() {
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch("input state size".into()));
        }
    }
    let count = basis.len();
    let cols = count * count;
    let n_elem = spec.readout_elements.len();
    let rows_per_state = spec.rotations.len() * n_elem;
    let rows = spec.data_size();

    // Y[j][n] = R_j E_n, shared across states.
    let y: Vec<Vec<ComplexMatrix>> = spec
        .rotations
        .iter()
        .map(|r| basis.elements().iter().map(|e| r.matmul(e)).collect())
        .collect();

    let mut data = vec![ZERO; rows * cols];
    data.par_chunks_mut(rows_per_state * cols)
        .enumerate()
        .for_each(|(si, block)| {
            let rho = &spec.input_states[si];
            for (j, yj) in y.iter().enumerate() {
                let x: Vec<ComplexMatrix> = yj.iter().map(|ye| ye.matmul(rho)).collect();
                for (e, &(k, l)) in spec.readout_elements.iter().enumerate() {
                    let row_local = j * n_elem + e;
                    let out = &mut block[row_local * cols..(row_local + 1) * cols];
                    for m in 0..count {
                        let p = x[m].row(k - 1);
                        for n in 0..count {
                            let q = yj[n].row(l - 1);
                            let mut acc = ZERO;
                            for c in 0..d {
                                acc += p[c] * q[c].conj();
                            }
                            out[n * count + m] = acc;
                        }
                    }
                }
            }
        });

    Ok(CoefficientMatrix {
        rows,
        cols,
        data,
        row_labels: spec.configurations(),
    })
}

/// Subsystem pair of a three-qubit register, 0-based qubit positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsystemPair {
    /// Qubits 0 and 1, spectator 2.
    Q01,
    /// Qubits 0 and 2, spectator 1.
    Q02,
    /// Qubits 1 and 2, spectator 0.
    Q12,
}

impl SubsystemPair {
    pub fn qubits(&self) -> (usize, usize) {
        match self {
            SubsystemPair::Q01 => (0, 1),
            SubsystemPair::Q02 => (0, 2),
            SubsystemPair::Q12 => (1, 2),
        }
    }

    pub fn spectator(&self) -> usize {
        match self {
            SubsystemPair::Q01 => 2,
            SubsystemPair::Q02 => 1,
            SubsystemPair::Q12 => 0,
        }
    }

    /// Parses the external 1-based pair name: "12", "13" or "23".
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "12" => Ok(SubsystemPair::Q01),
            "13" => Ok(SubsystemPair::Q02),
            "23" => Ok(SubsystemPair::Q12),
            other => Err(Error::InvalidPair(other.to_string())),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SubsystemPair::Q01 => "12",
            SubsystemPair::Q02 => "13",
            SubsystemPair::Q12 => "23",
        }
    }
}

/// Mapping from the four two-qubit readout positions to sums of two
/// three-qubit positions, all 1-based. Entry `e` corresponds to
/// `readout_elements(2)[e]` and the two-qubit value is the sum of the two
/// listed entries of the rotated three-qubit density matrix; the sums
/// reproduce the partial trace over the spectator.
pub fn subsystem_readout_map(pair: SubsystemPair) -> [((usize, usize), (usize, usize)); 4] {
    match pair {
        // reduced (2,4), (1,3), (3,4), (1,2) in that order
        SubsystemPair::Q01 => [
            ((4, 8), (3, 7)),
            ((2, 6), (1, 5)),
            ((5, 7), (6, 8)),
            ((1, 3), (2, 4)),
        ],
        SubsystemPair::Q02 => [
            ((4, 8), (2, 6)),
            ((3, 7), (1, 5)),
            ((5, 6), (7, 8)),
            ((1, 2), (3, 4)),
        ],
        SubsystemPair::Q12 => [
            ((6, 8), (2, 4)),
            ((5, 7), (1, 3)),
            ((7, 8), (3, 4)),
            ((5, 6), (1, 2)),
        ],
    }
}

/// Partial trace over `spectator` of an 8×8 three-qubit operator.
pub fn partial_trace_spectator(rho: &ComplexMatrix, spectator: usize) -> ComplexMatrix {
    assert_eq!(rho.rows(), 8);
    assert!(spectator < 3);
    let keep: Vec<usize> = (0..3).filter(|&q| q != spectator).collect();
    let mut out = ComplexMatrix::zeros(4, 4);
    let bit = |idx: usize, q: usize| (idx >> (2 - q)) & 1;
    for r3 in 0..8 {
        for c3 in 0..8 {
            if bit(r3, spectator) != bit(c3, spectator) {
                continue;
            }
            let r2 = (bit(r3, keep[0]) << 1) | bit(r3, keep[1]);
            let c2 = (bit(c3, keep[0]) << 1) | bit(c3, keep[1]);
            let v = rho[(r3, c3)];
            out[(r2, c2)] += v;
        }
    }
    out
}
