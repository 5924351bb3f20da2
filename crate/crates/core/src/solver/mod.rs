//! The two constrained convex programs of the workbench.
//!
//! LS-QPT: minimize ‖B − Φ·vec χ‖₂ subject to χ ⪰ 0 and
//! Σχ_mn E_m†E_n = I. CS-QPT: minimize ‖vec χ‖₁ subject to
//! ‖B − Φ·vec χ‖₂ ≤ ε and the same structure constraints. Both run on a
//! real embedding of the Hermitian unknown (see [`embed`]) through a
//! consensus splitting with closed-form proximal steps (see [`admm`]).

mod admm;
mod diagnostics;
mod embed;

pub use admm::{Objective, DATA_SLACK};
pub use diagnostics::{rip_estimate, sample_size_bound};
pub use embed::{HermitianCoords, TpProjector};

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bases::OperatorBasis;
use crate::error::Error;
use crate::linalg::RealMatrix;
use crate::process::ProcessMatrix;
use crate::protocol::CoefficientMatrix;
use crate::sim::DataVector;
use crate::Result;

/// Tuning knobs for one solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Initial penalty ρ; rescaled adaptively by residual balancing.
    pub penalty: f64,
    /// Primal/dual stopping tolerance (used both absolutely, scaled by
    /// problem dimension, and relatively).
    pub tolerance: f64,
    /// Largest tolerated negative eigenvalue of a converged χ.
    pub psd_tol: f64,
    /// Largest tolerated trace-preservation residual of a converged χ.
    pub tp_tol: f64,
    /// Convergence is evaluated every this many iterations.
    pub check_every: usize,
    pub adapt_penalty: bool,
    /// Record residuals every k iterations into the report (0 disables).
    pub history_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            penalty: 1.0,
            tolerance: 1e-7,
            psd_tol: 1e-8,
            tp_tol: 1e-6,
            check_every: 10,
            adapt_penalty: true,
            history_every: 0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.max_iterations >= 1
            && self.penalty > 0.0
            && self.tolerance > 0.0
            && self.psd_tol > 0.0
            && self.tp_tol > 0.0
            && self.check_every >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange("solver options must be positive".into()))
        }
    }
}

/// Residuals of the reported process matrix.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveResiduals {
    /// ‖B − Φ·vec χ‖₂ on the reported point.
    pub data_l2: f64,
    /// max(0, −λ_min(χ)).
    pub psd_violation: f64,
    /// ‖Σχ_mn E_m†E_n − I‖_F.
    pub tp_violation: f64,
    /// ‖vec χ‖₁.
    pub l1_value: f64,
}

/// One sample of the residual history.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualSample {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub data_l2: f64,
    pub l1_value: f64,
    pub rho: f64,
}

/// Result of one LS-QPT or CS-QPT solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub chi_est: ProcessMatrix,
    pub iterations: usize,
    pub residuals: SolveResiduals,
    /// Set only when the stopping criteria were met *and* the reported
    /// point satisfies the psd/tp (and, for CS, data) tolerances.
    pub converged: bool,
    /// Data rows cannot pin down the trace-preserving degrees of freedom;
    /// the solution is one feasible minimizer among many.
    pub underdetermined: bool,
    pub wall_time_s: f64,
    pub history: Vec<ResidualSample>,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    chi_est: serde_json::Value,
    iterations: usize,
    residuals: SolveResiduals,
    converged: bool,
    underdetermined: bool,
    wall_time_s: f64,
    history: Vec<ResidualSample>,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        let chi: serde_json::Value = serde_json::from_str(&self.chi_est.to_json()?)?;
        Ok(serde_json::to_string_pretty(&ReportJson {
            chi_est: chi,
            iterations: self.iterations,
            residuals: self.residuals,
            converged: self.converged,
            underdetermined: self.underdetermined,
            wall_time_s: self.wall_time_s,
            history: self.history.clone(),
        })?)
    }
}

/// Cached real embedding of one (Φ, basis) pair; lets a sweep solve many
/// row subsets without rebuilding the constraint machinery.
pub struct ReconstructionContext {
    basis: Arc<OperatorBasis>,
    coords: HermitianCoords,
    tp: TpProjector,
    a_full: RealMatrix,
    m_complex: usize,
}

impl ReconstructionContext {
    pub fn new(phi: &CoefficientMatrix, basis: Arc<OperatorBasis>) -> Result<Self> {
        let count = basis.len();
        if phi.cols() != count * count {
            return Err(Error::DimensionMismatch(format!(
                "phi has {} columns, basis wants {}",
                phi.cols(),
                count * count
            )));
        }
        let coords = HermitianCoords::new(count);
        let tp = TpProjector::new(&basis, &coords)?;
        let a_full = embed::real_data_matrix(phi, &coords);
        Ok(Self {
            basis,
            coords,
            tp,
            a_full,
            m_complex: phi.rows(),
        })
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    pub fn rows(&self) -> usize {
        self.m_complex
    }

    /// Solves on a subset of complex data rows (`None` = all rows).
    /// `values` must hold the data points of exactly the selected rows,
    /// in the same order.
    pub fn solve(
        &self,
        rows: Option<&[usize]>,
        values: &[Complex64],
        objective: Objective,
        opts: &SolverOptions,
    ) -> Result<SolveReport> {
        opts.validate()?;
        if let Objective::L1Ball { epsilon } = objective {
            if epsilon < 0.0 || !epsilon.is_finite() {
                return Err(Error::OutOfRange(format!("epsilon = {epsilon}")));
            }
        }
        let m_used = rows.map_or(self.m_complex, |r| r.len());
        if values.len() != m_used {
            return Err(Error::LengthMismatch {
                expected: m_used,
                got: values.len(),
            });
        }

        let gathered;
        let a: &RealMatrix = match rows {
            None => &self.a_full,
            Some(sel) => {
                let n = self.coords.len();
                let mut sub = RealMatrix::zeros(2 * sel.len(), n);
                for (local, &r) in sel.iter().enumerate() {
                    if r >= self.m_complex {
                        return Err(Error::IndexOutOfRange(format!(
                            "data row {r} of {}",
                            self.m_complex
                        )));
                    }
                    sub.row_mut(local).copy_from_slice(self.a_full.row(r));
                    sub.row_mut(sel.len() + local)
                        .copy_from_slice(self.a_full.row(self.m_complex + r));
                }
                gathered = sub;
                &gathered
            }
        };
        let b = embed::real_data_vector(values);

        let start = Instant::now();
        let outcome = admm::run(
            &admm::ProblemRef {
                a,
                b: &b,
                coords: &self.coords,
                tp: &self.tp,
                objective,
            },
            opts,
        )?;
        let wall_time_s = start.elapsed().as_secs_f64();

        let chi_est = ProcessMatrix::new(self.basis.clone(), self.coords.to_matrix(&outcome.u))?;
        let free_params = self.coords.len() - self.basis.dim() * self.basis.dim();
        Ok(SolveReport {
            chi_est,
            iterations: outcome.iterations,
            residuals: SolveResiduals {
                data_l2: outcome.data_residual,
                psd_violation: (-outcome.min_eigenvalue).max(0.0),
                tp_violation: outcome.tp_residual,
                l1_value: outcome.l1_value,
            },
            converged: outcome.converged,
            underdetermined: 2 * m_used < free_params,
            wall_time_s,
            history: outcome.history,
        })
    }
}

/// Least-squares QPT (constrained linear inversion) on the given data.
pub fn ls_qpt(
    data: &DataVector,
    phi: &CoefficientMatrix,
    basis: &Arc<OperatorBasis>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_rows(data, phi)?;
    let ctx = ReconstructionContext::new(phi, basis.clone())?;
    ctx.solve(None, data.values(), Objective::LeastSquares, opts)
}

/// Compressed-sensing QPT: l1 recovery within the ε data ball.
pub fn cs_qpt(
    data: &DataVector,
    phi: &CoefficientMatrix,
    epsilon: f64,
    basis: &Arc<OperatorBasis>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_rows(data, phi)?;
    let ctx = ReconstructionContext::new(phi, basis.clone())?;
    ctx.solve(None, data.values(), Objective::L1Ball { epsilon }, opts)
}

fn check_rows(data: &DataVector, phi: &CoefficientMatrix) -> Result<()> {
    if data.len() != phi.rows() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} rows, phi has {}",
            data.len(),
            phi.rows()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{pauli_basis, pauli_error_basis};
    use crate::gates::{gate_cnot, rx, rz};
    use crate::linalg::ComplexMatrix;
    use crate::process::{chi_from_unitary, fidelity, random_tp_process, ProcessMatrix};
    use crate::protocol::{build_phi, Configuration, TomographySpec};
    use crate::sim::{simulate_dataset, subsample, NoiseModel};
    use num_complex::Complex64;
    use rand::SeedableRng;

    fn quick_opts() -> SolverOptions {
        SolverOptions {
            tolerance: 1e-6,
            ..SolverOptions::default()
        }
    }

    #[test]
    fn ls_recovers_cnot_from_full_noiseless_data() {
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let chi_true = chi_from_unitary(&gate_cnot(), &basis).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
        let report = ls_qpt(&data, &phi, &basis, &quick_opts()).unwrap();
        assert!(report.converged, "residuals: {:?}", report.residuals);
        let f = fidelity(&report.chi_est, &chi_true).unwrap();
        assert!(f >= 0.999, "fidelity = {f}");
        assert!(report.residuals.psd_violation <= 1e-8);
        assert!(report.residuals.tp_violation <= 1e-6);
        assert!(!report.underdetermined);
    }

    #[test]
    fn ls_recovers_fully_depolarizing_channel() {
        // χ = I/D is trace preserving; recovery to 1e-3 elementwise
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let mut chi = ComplexMatrix::zeros(16, 16);
        for i in 0..16 {
            chi[(i, i)] = Complex64::new(1.0 / 16.0, 0.0);
        }
        let chi_true = ProcessMatrix::new(basis.clone(), chi).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
        let report = ls_qpt(&data, &phi, &basis, &quick_opts()).unwrap();
        assert!(report.converged);
        assert!(report.chi_est.chi().max_abs_diff(chi_true.chi()) <= 1e-3);
    }

    #[test]
    fn zero_row_problem_is_flagged_not_converged() {
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let empty_phi = phi.select_rows(&[]).unwrap();
        let empty_data = crate::sim::DataVector::new(vec![], vec![], 0.0, 0).unwrap();
        let report = ls_qpt(&empty_data, &empty_phi, &basis, &quick_opts()).unwrap();
        assert!(!report.converged);
        assert!(report.underdetermined);
        // the returned point is still a valid process
        let validity = report.chi_est.validity_report();
        assert!(validity.passes(1e-8, 1e-6));
    }

    #[test]
    fn cs_recovers_cnot_in_error_basis_from_44_points() {
        let spec = TomographySpec::standard(2).unwrap();
        let cnot = gate_cnot();
        let basis = Arc::new(pauli_error_basis(&cnot, 2).unwrap());
        let phi = build_phi(&spec, &basis).unwrap();
        let chi_true = chi_from_unitary(&cnot, &basis).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();

        let mut hits = 0;
        let trials = 12;
        for seed in 0..trials {
            let (sub_data, sub_phi) = subsample(&data, &phi, 44, seed).unwrap();
            let report = cs_qpt(&sub_data, &sub_phi, 1e-8, &basis, &quick_opts()).unwrap();
            assert!(report.underdetermined);
            let f = fidelity(&report.chi_est, &chi_true).unwrap();
            if f >= 0.99 {
                hits += 1;
            }
            if report.converged {
                assert!(report.residuals.data_l2 <= 1e-8 + DATA_SLACK);
                assert!(report.residuals.psd_violation <= 1e-8);
                assert!(report.residuals.tp_violation <= 1e-6);
            }
        }
        assert!(hits * 10 >= trials * 9, "only {hits}/{trials} recoveries");
    }

    #[test]
    fn cs_full_data_equality_constraint_finds_sparse_solution() {
        let spec = TomographySpec::standard(2).unwrap();
        let cnot = gate_cnot();
        let basis = Arc::new(pauli_error_basis(&cnot, 2).unwrap());
        let phi = build_phi(&spec, &basis).unwrap();
        let chi_true = chi_from_unitary(&cnot, &basis).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
        let report = cs_qpt(&data, &phi, 0.0, &basis, &quick_opts()).unwrap();
        let f = fidelity(&report.chi_est, &chi_true).unwrap();
        assert!(f >= 0.999, "fidelity = {f}");
        assert_eq!(report.chi_est.sparsity(1e-4), 1);
        assert!(report.residuals.data_l2 <= DATA_SLACK);
    }

    #[test]
    fn cs_l1_never_exceeds_ls_l1_on_same_data() {
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let chi_true = chi_from_unitary(&gate_cnot(), &basis).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
        let (sub_data, sub_phi) = subsample(&data, &phi, 100, 3).unwrap();
        let ls = ls_qpt(&sub_data, &sub_phi, &basis, &quick_opts()).unwrap();
        // allow the CS ball to contain the LS solution
        let eps = ls.residuals.data_l2 + 1e-9;
        let cs = cs_qpt(&sub_data, &sub_phi, eps, &basis, &quick_opts()).unwrap();
        assert!(
            cs.residuals.l1_value <= ls.residuals.l1_value + 1e-6,
            "cs {} vs ls {}",
            cs.residuals.l1_value,
            ls.residuals.l1_value
        );
    }

    #[test]
    fn impossible_data_is_reported_infeasible() {
        // single 1-qubit configuration demanding Tr(MΛρ) = 5, far outside
        // the reachable [0,1]
        let e0 = ComplexMatrix::basis_ket(2, 0);
        let rho = crate::linalg::outer(&e0, &e0);
        let spec = TomographySpec::custom(
            1,
            vec![rho],
            vec![ComplexMatrix::identity(2)],
            vec![(1, 1)],
        );
        let basis = Arc::new(pauli_basis(1));
        let phi = build_phi(&spec, &basis).unwrap();
        let data = crate::sim::DataVector::new(
            vec![Complex64::new(5.0, 0.0)],
            vec![Configuration {
                state_index: 0,
                rotation_index: 0,
                element_index: 0,
            }],
            0.0,
            0,
        )
        .unwrap();
        let opts = SolverOptions {
            max_iterations: 600,
            ..quick_opts()
        };
        match cs_qpt(&data, &phi, 0.1, &basis, &opts) {
            Err(Error::Infeasible { attainable, epsilon }) => {
                assert!(attainable > epsilon);
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn one_qubit_l1_matches_brute_force_over_unitary_family() {
        // Informationally complete single-qubit problem; the CS optimum is
        // compared against a direct search over the rank-1 unitary family
        // parametrized as Rz(a)·Rx(b)·Rz(c).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let kets = [
            ComplexMatrix::basis_ket(2, 0),
            ComplexMatrix::basis_ket(2, 1),
            ComplexMatrix::new(2, 1, vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]),
            ComplexMatrix::new(2, 1, vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)]),
        ];
        let states: Vec<ComplexMatrix> = kets.iter().map(|k| crate::linalg::outer(k, k)).collect();
        let rotations = vec![
            ComplexMatrix::identity(2),
            rx(std::f64::consts::FRAC_PI_2),
            crate::gates::ry(std::f64::consts::FRAC_PI_2),
        ];
        let elements = vec![(1, 1), (1, 2)];
        let spec = TomographySpec::custom(1, states, rotations, elements);
        let basis = Arc::new(pauli_basis(1));
        let phi = build_phi(&spec, &basis).unwrap();

        let u_true = rz(0.4).matmul(&rx(0.9));
        let chi_true = chi_from_unitary(&u_true, &basis).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
        let eps = 1e-7;
        let report = cs_qpt(&data, &phi, eps, &basis, &quick_opts()).unwrap();
        assert!(report.converged);

        // brute force: coordinate descent from a grid over (a, b, c),
        // penalizing data-ball violations
        let b_vec = data.values();
        let objective = |a: f64, b: f64, c: f64| -> f64 {
            let u = rz(a).matmul(&rx(b)).matmul(&rz(c));
            let chi = chi_from_unitary(&u, &basis).unwrap();
            let predicted = phi.apply(&chi.vectorize()).unwrap();
            let resid: f64 = predicted
                .iter()
                .zip(b_vec)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let l1: f64 = chi.chi().data().iter().map(|z| z.norm()).sum();
            l1 + 1e4 * (resid - eps).max(0.0)
        };
        let mut best = f64::INFINITY;
        let grid = 10;
        let tau = std::f64::consts::TAU;
        let mut best_angles = (0.0, 0.0, 0.0);
        for ia in 0..grid {
            for ib in 0..grid {
                for ic in 0..grid {
                    let (a, b, c) = (
                        ia as f64 / grid as f64 * tau,
                        ib as f64 / grid as f64 * tau,
                        ic as f64 / grid as f64 * tau,
                    );
                    let v = objective(a, b, c);
                    if v < best {
                        best = v;
                        best_angles = (a, b, c);
                    }
                }
            }
        }
        let (mut a, mut b, mut c) = best_angles;
        let mut step = tau / grid as f64;
        for _ in 0..200 {
            let mut improved = false;
            for (da, db, dc) in [
                (step, 0.0, 0.0),
                (-step, 0.0, 0.0),
                (0.0, step, 0.0),
                (0.0, -step, 0.0),
                (0.0, 0.0, step),
                (0.0, 0.0, -step),
            ] {
                let v = objective(a + da, b + db, c + dc);
                if v < best {
                    best = v;
                    a += da;
                    b += db;
                    c += dc;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
            if step < 1e-10 {
                break;
            }
        }
        let brute_l1 = best;
        let rel = (report.residuals.l1_value - brute_l1).abs() / brute_l1.abs();
        assert!(
            rel <= 1e-3,
            "cs l1 {} vs brute-force l1 {brute_l1}",
            report.residuals.l1_value
        );
    }

    #[test]
    fn reports_carry_feasible_solutions_for_random_processes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        for _ in 0..3 {
            let chi_true = random_tp_process(&basis, 2, &mut rng);
            let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
            let report = ls_qpt(&data, &phi, &basis, &quick_opts()).unwrap();
            assert!(report.converged);
            let f = fidelity(&report.chi_est, &chi_true).unwrap();
            assert!(f >= 0.999, "fidelity = {f}");
        }
    }

    #[test]
    fn report_history_records_and_serializes() {
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let chi_true = chi_from_unitary(&gate_cnot(), &basis).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
        let opts = SolverOptions {
            history_every: 20,
            ..quick_opts()
        };
        let report = ls_qpt(&data, &phi, &basis, &opts).unwrap();
        assert!(!report.history.is_empty());
        assert!(report.history[0].iteration == 20);
        let text = report.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(value["history"].as_array().unwrap().len() == report.history.len());
        assert_eq!(value["chi_est"]["basis_kind"], "PB");
        assert!(value["wall_time_s"].as_f64().unwrap() >= 0.0);
    }

    #[test]
    fn solver_rejects_inconsistent_shapes() {
        let spec = TomographySpec::standard(2).unwrap();
        let basis = Arc::new(pauli_basis(2));
        let phi = build_phi(&spec, &basis).unwrap();
        let chi_true = chi_from_unitary(&gate_cnot(), &basis).unwrap();
        let data = simulate_dataset(&chi_true, &spec, &NoiseModel::none()).unwrap();
        let (short, _) = subsample(&data, &phi, 10, 1).unwrap();
        assert!(matches!(
            ls_qpt(&short, &phi, &basis, &quick_opts()),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(cs_qpt(&data, &phi, -1.0, &basis, &quick_opts()).is_err());
    }
}
