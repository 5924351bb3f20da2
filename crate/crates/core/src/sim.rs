//! Forward simulation of the tomography experiment.
//!
//! Data points are generated by direct density-matrix arithmetic
//! (Λ(ρ) via the χ expansion, rotation, entry extraction), independently
//! of the coefficient matrix Φ; agreement between the two routes is one
//! of the pipeline's cross-checks.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::ComplexMatrix;
use crate::process::{apply_map, ProcessMatrix};
use crate::protocol::{
    subsystem_readout_map, CoefficientMatrix, Configuration, SubsystemPair, TomographySpec,
};
use crate::seeding;
use crate::Result;

/// Noise applied to simulated data points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseKind {
    None,
    /// i.i.d. Gaussian on the real and imaginary part of every data point,
    /// standard deviation per real component.
    AdditiveGaussian { sigma: f64 },
}

impl Default for NoiseKind {
    fn default() -> Self {
        NoiseKind::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::OutOfRange(format!("noise sigma = {sigma}")));
        }
        Ok(Self {
            kind: NoiseKind::AdditiveGaussian { sigma },
            seed,
        })
    }

    pub fn sigma(&self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::AdditiveGaussian { sigma } => sigma,
        }
    }
}

/// One simulated (or imported) data set: complex values, their
/// configuration labels, the l2 noise bound ε and the seed that produced
/// the noise draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DataVector {
    values: Vec<Complex64>,
    labels: Vec<Configuration>,
    noise_bound: f64,
    seed: u64,
}

impl DataVector {
    pub fn new(
        values: Vec<Complex64>,
        labels: Vec<Configuration>,
        noise_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                got: values.len(),
            });
        }
        if noise_bound < 0.0 {
            return Err(Error::OutOfRange(format!("noise bound = {noise_bound}")));
        }
        Ok(Self {
            values,
            labels,
            noise_bound,
            seed,
        })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn labels(&self) -> &[Configuration] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// l2 bound on the injected noise (exact norm of the drawn vector for
    /// simulated data).
    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn to_json(&self) -> Result<String> {
        let json = DataJson {
            labels: self.labels.clone(),
            values: self.values.iter().map(|z| [z.re, z.im]).collect(),
            epsilon: self.noise_bound,
            seed: self.seed,
        };
        Ok(serde_json::to_string_pretty(&json)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: DataJson = serde_json::from_str(text)?;
        DataVector::new(
            json.values
                .iter()
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
            json.labels,
            json.epsilon,
            json.seed,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct DataJson {
    labels: Vec<Configuration>,
    values: Vec<[f64; 2]>,
    epsilon: f64,
    seed: u64,
}

/// Noiseless data values in configuration order: (R Λ(ρ) R†)_{kl}.
pub fn simulate_clean(chi: &ProcessMatrix, spec: &TomographySpec) -> Result<Vec<Complex64>> {
    if chi.dim() != spec.dim() {
        return Err(Error::DimensionMismatch(format!(
            "process dimension {} vs spec dimension {}",
            chi.dim(),
            spec.dim()
        )));
    }
    let mut values = Vec::with_capacity(spec.data_size());
    for rho in spec.input_states() {
        let out = apply_map(chi, rho)?;
        for rot in spec.rotations() {
            let rotated = rot.matmul(&out).matmul(&rot.dagger());
            for &(k, l) in spec.readout_elements() {
                values.push(rotated[(k - 1, l - 1)]);
            }
        }
    }
    Ok(values)
}

/// Draws a complex Gaussian noise vector and returns it with its exact l2
/// norm.
pub fn gaussian_noise(len: usize, sigma: f64, rng: &mut impl Rng) -> (Vec<Complex64>, f64) {
    let normal = Normal::new(0.0, sigma).expect("sigma validated at construction");
    let z: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    let norm = z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    (z, norm)
}

/// Simulates the full data set for a process under `spec`, injecting noise
/// per the model. The recorded ε is the exact l2 norm of the drawn noise
/// vector (0 for noiseless runs); everything is deterministic given the
/// noise seed.
pub fn simulate_dataset(
    chi: &ProcessMatrix,
    spec: &TomographySpec,
    noise: &NoiseModel,
) -> Result<DataVector> {
    let clean = simulate_clean(chi, spec)?;
    let labels = spec.configurations();
    finish_dataset(clean, labels, noise)
}

fn finish_dataset(
    clean: Vec<Complex64>,
    labels: Vec<Configuration>,
    noise: &NoiseModel,
) -> Result<DataVector> {
    match noise.kind {
        NoiseKind::None => DataVector::new(clean, labels, 0.0, noise.seed),
        NoiseKind::AdditiveGaussian { sigma } => {
            if sigma < 0.0 {
                return Err(Error::OutOfRange(format!("noise sigma = {sigma}")));
            }
            if sigma == 0.0 {
                return DataVector::new(clean, labels, 0.0, noise.seed);
            }
            let mut rng = seeding::stream(noise.seed, seeding::purpose::NOISE, 0, 0);
            let (z, eps) = gaussian_noise(clean.len(), sigma, &mut rng);
            let values = clean.iter().zip(&z).map(|(a, b)| a + b).collect();
            DataVector::new(values, labels, eps, noise.seed)
        }
    }
}

/// Pseudo-pure state (1−η)/d · I + η |0…0⟩⟨0…0|.
pub fn pps_state(n_qubits: usize, eta: f64) -> Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange(format!("purity eta = {eta}")));
    }
    let d = 1usize << n_qubits;
    let mut m = ComplexMatrix::identity(d).scale(Complex64::new((1.0 - eta) / d as f64, 0.0));
    m[(0, 0)] += Complex64::new(eta, 0.0);
    Ok(m)
}

/// Seeded selection of `m` distinct rows out of `total`, ascending.
pub fn subsample_rows(total: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m < 1 || m > total {
        return Err(Error::OutOfRange(format!(
            "subsample size {m} for {total} rows"
        )));
    }
    let mut rng = seeding::stream(seed, seeding::purpose::ROWS, m as u64, total as u64);
    let mut rows = rand::seq::index::sample(&mut rng, total, m).into_vec();
    rows.sort_unstable();
    Ok(rows)
}

/// Applies one seeded row selection to a data vector and its coefficient
/// matrix. The full-vector noise bound is kept: the l2 norm of a
/// sub-vector of the noise never exceeds that of the full vector, so the
/// bound stays valid (if loose) after subsampling.
pub fn subsample(
    data: &DataVector,
    phi: &CoefficientMatrix,
    m: usize,
    seed: u64,
) -> Result<(DataVector, CoefficientMatrix)> {
    if data.len() != phi.rows() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} rows, phi has {}",
            data.len(),
            phi.rows()
        )));
    }
    let rows = subsample_rows(data.len(), m, seed)?;
    let values = rows.iter().map(|&r| data.values[r]).collect();
    let labels = rows.iter().map(|&r| data.labels[r]).collect();
    let sub_data = DataVector::new(values, labels, data.noise_bound, seed)?;
    let sub_phi = phi.select_rows(&rows)?;
    Ok((sub_data, sub_phi))
}

/// Embeds a two-qubit operator at the physical positions of `pair`,
/// identity on the spectator.
pub fn embed_pair(op: &ComplexMatrix, pair: SubsystemPair) -> ComplexMatrix {
    assert_eq!(op.rows(), 4);
    let (qa, qb) = pair.qubits();
    let spect = pair.spectator();
    let bit = |idx: usize, q: usize| (idx >> (2 - q)) & 1;
    let mut out = ComplexMatrix::zeros(8, 8);
    for r in 0..8 {
        for c in 0..8 {
            if bit(r, spect) != bit(c, spect) {
                continue;
            }
            let r2 = (bit(r, qa) << 1) | bit(r, qb);
            let c2 = (bit(c, qa) << 1) | bit(c, qb);
            out[(r, c)] = op[(r2, c2)];
        }
    }
    out
}

/// Embeds a two-qubit state at the physical positions of `pair` with the
/// spectator initialized to |0⟩⟨0|.
fn embed_pair_spectator_zero(rho: &ComplexMatrix, pair: SubsystemPair) -> ComplexMatrix {
    assert_eq!(rho.rows(), 4);
    let (qa, qb) = pair.qubits();
    let spect = pair.spectator();
    let bit = |idx: usize, q: usize| (idx >> (2 - q)) & 1;
    let mut out = ComplexMatrix::zeros(8, 8);
    for r in 0..8 {
        for c in 0..8 {
            if bit(r, spect) != 0 || bit(c, spect) != 0 {
                continue;
            }
            let r2 = (bit(r, qa) << 1) | bit(r, qb);
            let c2 = (bit(c, qa) << 1) | bit(c, qb);
            out[(r, c)] = rho[(r2, c2)];
        }
    }
    out
}

/// Runs the two-qubit protocol on a subsystem of a three-qubit register.
///
/// Each two-qubit input is embedded at the pair's physical positions with
/// the spectator in |0⟩, evolved under `u3`, rotated by the two-qubit
/// tomographic rotation extended by identity, and read out through the
/// coherence sums of [`subsystem_readout_map`]. The output has the
/// two-qubit data layout of `spec2`.
pub fn simulate_subsystem_dataset(
    u3: &ComplexMatrix,
    pair: SubsystemPair,
    spec2: &TomographySpec,
    noise: &NoiseModel,
) -> Result<DataVector> {
    if u3.rows() != 8 || u3.cols() != 8 {
        return Err(Error::DimensionMismatch(format!(
            "subsystem evolution is {}x{}, expected 8x8",
            u3.rows(),
            u3.cols()
        )));
    }
    if spec2.n_qubits() != 2 {
        return Err(Error::DimensionMismatch(
            "subsystem runs use a two-qubit protocol".into(),
        ));
    }
    u3.check_unitary(crate::bases::UNITARY_TOL)?;
    let map = subsystem_readout_map(pair);
    if spec2.readout_elements().len() != map.len() {
        return Err(Error::DimensionMismatch(
            "subsystem readout expects the standard four two-qubit elements".into(),
        ));
    }
    let mut values = Vec::with_capacity(spec2.data_size());
    for rho2 in spec2.input_states() {
        let rho3 = embed_pair_spectator_zero(rho2, pair);
        let out = u3.matmul(&rho3).matmul(&u3.dagger());
        for rot2 in spec2.rotations() {
            let rot3 = embed_pair(rot2, pair);
            let rotated = rot3.matmul(&out).matmul(&rot3.dagger());
            for &((r1, c1), (r2, c2)) in &map {
                values.push(rotated[(r1 - 1, c1 - 1)] + rotated[(r2 - 1, c2 - 1)]);
            }
        }
    }
    finish_dataset(values, spec2.configurations(), noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{pauli_basis, pauli_error_basis};
    use crate::gates::{gate_cnn, gate_cnot, gate_jcoupling, gate_refocused_evolution, InternalHamiltonian};
    use crate::linalg::outer;
    use crate::process::chi_from_unitary;
    use crate::protocol::build_phi;
    use std::sync::Arc;

    fn identity_chi2() -> ProcessMatrix {
        chi_from_unitary(&ComplexMatrix::identity(4), &Arc::new(pauli_basis(2))).unwrap()
    }

    #[test]
    fn diagonal_state_has_no_coherence() {
        let spec = TomographySpec::standard(2).unwrap();
        let data = simulate_dataset(&identity_chi2(), &spec, &NoiseModel::none()).unwrap();
        // state |00⟩ (index 0), rotation II (index 0), element (1,2) (index 3)
        let cfg = Configuration {
            state_index: 0,
            rotation_index: 0,
            element_index: 3,
        };
        let row = spec.row_index(&cfg);
        assert!(data.values()[row].norm() < 1e-14);
        assert_eq!(data.noise_bound(), 0.0);
    }

    #[test]
    fn cnot_on_plus_plus_matches_permutation_oracle() {
        // independent route: CNOT as an index permutation on the ket,
        // never touching the χ machinery
        let spec = TomographySpec::standard(2).unwrap();
        let cnot = gate_cnot();
        let chi = chi_from_unitary(&cnot, &Arc::new(pauli_basis(2))).unwrap();
        let data = simulate_dataset(&chi, &spec, &NoiseModel::none()).unwrap();

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexMatrix::new(2, 1, vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
        let mut ket = plus.kron(&plus);
        // CNOT permutes |10⟩ and |11⟩
        let tmp = ket[(2, 0)];
        ket[(2, 0)] = ket[(3, 0)];
        ket[(3, 0)] = tmp;
        let rho_out = outer(&ket, &ket);

        let state_index = 10; // digits (+,+) = (2,2) -> 2*4+2
        for (rotation_index, rot) in spec.rotations().iter().enumerate() {
            let rotated = rot.matmul(&rho_out).matmul(&rot.dagger());
            for (element_index, &(k, l)) in spec.readout_elements().iter().enumerate() {
                let cfg = Configuration {
                    state_index,
                    rotation_index,
                    element_index,
                };
                let row = spec.row_index(&cfg);
                assert!((data.values()[row] - rotated[(k - 1, l - 1)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_data_equals_phi_times_chi_vector() {
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let chi = chi_from_unitary(&gate_cnot(), &basis).unwrap();
        let data = simulate_dataset(&chi, &spec, &NoiseModel::none()).unwrap();
        let predicted = phi.apply(&chi.vectorize()).unwrap();
        for (a, b) in data.values().iter().zip(&predicted) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn noise_bound_is_exact_norm_of_draw() {
        let spec = TomographySpec::standard(2).unwrap();
        let chi = identity_chi2();
        let clean = simulate_dataset(&chi, &spec, &NoiseModel::none()).unwrap();
        let noisy = simulate_dataset(&chi, &spec, &NoiseModel::gaussian(1e-2, 42).unwrap()).unwrap();
        let z_norm_sq: f64 = clean
            .values()
            .iter()
            .zip(noisy.values())
            .map(|(a, b)| (b - a).norm_sqr())
            .sum();
        assert!((noisy.noise_bound() - z_norm_sq.sqrt()).abs() < 1e-12);
        assert!(noisy.noise_bound() > 0.0);
    }

    #[test]
    fn simulation_is_bit_deterministic() {
        let spec = TomographySpec::standard(2).unwrap();
        let chi = identity_chi2();
        let noise = NoiseModel::gaussian(3e-3, 7).unwrap();
        let a = simulate_dataset(&chi, &spec, &noise).unwrap();
        let b = simulate_dataset(&chi, &spec, &noise).unwrap();
        assert_eq!(a, b);
        let c = simulate_dataset(&chi, &spec, &NoiseModel::gaussian(3e-3, 8).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pps_limits() {
        let d4 = pps_state(2, 1.0).unwrap();
        let e0 = ComplexMatrix::basis_ket(4, 0);
        assert!(d4.approx_eq(&outer(&e0, &e0), 1e-15));
        let mixed = pps_state(2, 0.0).unwrap();
        assert!(mixed.approx_eq(&ComplexMatrix::identity(4).scale(Complex64::new(0.25, 0.0)), 1e-15));
        assert!(pps_state(2, -0.1).is_err());
        assert!(pps_state(2, 1.1).is_err());
    }

    #[test]
    fn pps_three_qubit_spectrum() {
        let eta = 1e-5;
        let rho = pps_state(3, eta).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        // diagonal matrix: eigenvalues are the diagonal entries
        assert!((rho[(0, 0)].re - ((1.0 - eta) / 8.0 + eta)).abs() < 1e-15);
        for i in 1..8 {
            assert!((rho[(i, i)].re - (1.0 - eta) / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn subsample_contracts() {
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let data = simulate_dataset(&identity_chi2(), &spec, &NoiseModel::none()).unwrap();

        // full-size subsample is the identity permutation of rows
        let (full, phi_full) = subsample(&data, &phi, 256, 5).unwrap();
        assert_eq!(full.values(), data.values());
        assert_eq!(phi_full.rows(), 256);

        let (one, phi_one) = subsample(&data, &phi, 1, 5).unwrap();
        assert_eq!(one.len(), 1);
        let label = one.labels()[0];
        let row = spec.row_index(&label);
        assert_eq!(one.values()[0], data.values()[row]);
        assert_eq!(phi_one.row(0), phi.row(row));

        // determinism
        let (a, _) = subsample(&data, &phi, 40, 9).unwrap();
        let (b, _) = subsample(&data, &phi, 40, 9).unwrap();
        assert_eq!(a, b);

        assert!(subsample(&data, &phi, 0, 1).is_err());
        assert!(subsample(&data, &phi, 257, 1).is_err());
    }

    #[test]
    fn subsystem_identity_matches_two_qubit_identity_data() {
        let spec2 = TomographySpec::standard(2).unwrap();
        let direct = simulate_dataset(&identity_chi2(), &spec2, &NoiseModel::none()).unwrap();
        for pair in [SubsystemPair::Q01, SubsystemPair::Q02, SubsystemPair::Q12] {
            let sub = simulate_subsystem_dataset(
                &ComplexMatrix::identity(8),
                pair,
                &spec2,
                &NoiseModel::none(),
            )
            .unwrap();
            for (a, b) in sub.values().iter().zip(direct.values()) {
                assert!((a - b).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn subsystem_refocused_equals_plain_jcoupling_data() {
        let spec2 = TomographySpec::standard(2).unwrap();
        let h = InternalHamiltonian::default_three_qubit();
        for (pair, (i, j, k)) in [
            (SubsystemPair::Q01, (0usize, 1usize, 2usize)),
            (SubsystemPair::Q02, (0, 2, 1)),
            (SubsystemPair::Q12, (1, 2, 0)),
        ] {
            let jij = h.coupling_hz(i, j);
            let t = 1.0 / (2.0 * jij.abs());
            let refocused = gate_refocused_evolution(i, j, k, &h, t).unwrap();
            let sub =
                simulate_subsystem_dataset(&refocused, pair, &spec2, &NoiseModel::none()).unwrap();

            // two-qubit target: same J and t
            let u2 = gate_jcoupling(0, 1, jij, t, 2).unwrap();
            let chi2 = chi_from_unitary(&u2, &Arc::new(pauli_basis(2))).unwrap();
            let direct = simulate_dataset(&chi2, &spec2, &NoiseModel::none()).unwrap();
            for (a, b) in sub.values().iter().zip(direct.values()) {
                assert!((a - b).norm() <= 1e-9, "pair {pair:?}");
            }
        }
    }

    #[test]
    fn subsystem_cnn_reduces_to_control_dephased_cnot() {
        // Tracing out the copied target leaves the CNOT map composed with
        // dephasing of the control: Kraus {|0⟩⟨0|⊗I, |1⟩⟨1|⊗X}. The
        // subsystem data must match that channel, not the unitary CNOT.
        let spec2 = TomographySpec::standard(2).unwrap();
        let sub = simulate_subsystem_dataset(
            &gate_cnn(),
            SubsystemPair::Q01,
            &spec2,
            &NoiseModel::none(),
        )
        .unwrap();

        let basis = Arc::new(pauli_basis(2));
        let d = 4.0;
        let kraus = [
            {
                let mut a = ComplexMatrix::zeros(4, 4);
                a[(0, 0)] = Complex64::new(1.0, 0.0);
                a[(1, 1)] = Complex64::new(1.0, 0.0);
                a
            },
            {
                let mut a = ComplexMatrix::zeros(4, 4);
                a[(2, 3)] = Complex64::new(1.0, 0.0);
                a[(3, 2)] = Complex64::new(1.0, 0.0);
                a
            },
        ];
        let mut chi = ComplexMatrix::zeros(16, 16);
        for a in &kraus {
            let c: Vec<Complex64> = basis.elements().iter().map(|e| e.hs_inner(a) / d).collect();
            for m in 0..16 {
                for n in 0..16 {
                    chi[(m, n)] += c[m] * c[n].conj();
                }
            }
        }
        let chi = ProcessMatrix::new(basis, chi).unwrap();
        let direct = simulate_dataset(&chi, &spec2, &NoiseModel::none()).unwrap();
        for (a, b) in sub.values().iter().zip(direct.values()) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn subsystem_rejects_bad_inputs() {
        let spec2 = TomographySpec::standard(2).unwrap();
        let spec3 = TomographySpec::standard(3).unwrap();
        assert!(simulate_subsystem_dataset(
            &ComplexMatrix::identity(4),
            SubsystemPair::Q01,
            &spec2,
            &NoiseModel::none()
        )
        .is_err());
        assert!(simulate_subsystem_dataset(
            &ComplexMatrix::identity(8),
            SubsystemPair::Q01,
            &spec3,
            &NoiseModel::none()
        )
        .is_err());
    }

    #[test]
    fn data_vector_json_roundtrip() {
        let spec = TomographySpec::standard(2).unwrap();
        let data = simulate_dataset(
            &identity_chi2(),
            &spec,
            &NoiseModel::gaussian(1e-3, 3).unwrap(),
        )
        .unwrap();
        let text = data.to_json().unwrap();
        let back = DataVector::from_json(&text).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn pauli_error_basis_gives_same_data() {
        // data is basis-independent: Λ is physical
        let spec = TomographySpec::standard(2).unwrap();
        let cnot = gate_cnot();
        let pb = Arc::new(pauli_basis(2));
        let peb = Arc::new(pauli_error_basis(&cnot, 2).unwrap());
        let d1 = simulate_dataset(&chi_from_unitary(&cnot, &pb).unwrap(), &spec, &NoiseModel::none())
            .unwrap();
        let d2 =
            simulate_dataset(&chi_from_unitary(&cnot, &peb).unwrap(), &spec, &NoiseModel::none())
                .unwrap();
        for (a, b) in d1.values().iter().zip(d2.values()) {
            assert!((a - b).norm() <= 1e-10);
        }
    }
}
