//! Experiment orchestration: seeded fidelity-vs-data-size sweeps,
//! four-way method comparison, threshold tables and CSV/JSON export.
//!
//! Trials are paired across method/basis combinations: the noise draw
//! depends only on (master seed, trial) and the row selection only on
//! (master seed, m, trial), so a difference between two methods on the
//! same plan is never a sampling artifact. Aggregation is keyed by trial
//! index, which keeps sweeps byte-reproducible under parallel execution.

use std::io::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{basis_for, BasisKind, OperatorBasis};
use crate::error::Error;
use crate::gates::{
    gate_cnn, gate_cnot, gate_controlled_rx, gate_jcoupling, gate_refocused_evolution,
    InternalHamiltonian,
};
use crate::linalg::ComplexMatrix;
use crate::process::{chi_from_unitary, fidelity, ProcessMatrix};
use crate::protocol::{build_phi, TomographySpec};
use crate::seeding;
use crate::sim::{gaussian_noise, simulate_clean, subsample_rows, NoiseKind};
use crate::solver::{Objective, ReconstructionContext, SolverOptions};
use crate::Result;

/// Reconstruction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Ls,
    Cs,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Ls => "LS",
            Method::Cs => "CS",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LS" => Ok(Method::Ls),
            "CS" => Ok(Method::Cs),
            other => Err(Error::OutOfRange(format!("unknown method '{other}'"))),
        }
    }
}

/// A gate resolved from the registry.
#[derive(Debug, Clone)]
pub struct GateSpec {
    pub key: String,
    pub n_qubits: usize,
    pub unitary: ComplexMatrix,
    pub description: String,
}

/// One line of the `gates` listing.
#[derive(Debug, Clone, Serialize)]
pub struct GateCatalogEntry {
    pub name: &'static str,
    pub n_qubits: usize,
    pub description: &'static str,
}

/// Registry of the gates the workbench characterizes.
pub fn gate_catalog() -> Vec<GateCatalogEntry> {
    vec![
        GateCatalogEntry {
            name: "cnot",
            n_qubits: 2,
            description: "controlled-NOT, qubit 1 controls qubit 2",
        },
        GateCatalogEntry {
            name: "crx(theta)",
            n_qubits: 2,
            description: "controlled x-rotation by theta (e.g. crx(pi))",
        },
        GateCatalogEntry {
            name: "cnn",
            n_qubits: 3,
            description: "controlled-NOT-NOT: CNOT(1->3)·CNOT(1->2)",
        },
        GateCatalogEntry {
            name: "uj12",
            n_qubits: 2,
            description: "J-coupling evolution of qubits 1,2 at t = 1/2|J12|",
        },
        GateCatalogEntry {
            name: "uj13",
            n_qubits: 2,
            description: "J-coupling evolution of qubits 1,3 at t = 1/2|J13|",
        },
        GateCatalogEntry {
            name: "uj23",
            n_qubits: 2,
            description: "J-coupling evolution of qubits 2,3 at t = 1/2|J23|",
        },
        GateCatalogEntry {
            name: "refocused(i,j,k)",
            n_qubits: 3,
            description: "refocused two-body evolution of qubits i,j with spectator k (1-based)",
        },
    ]
}

/// The six gates of the comparison tables, in table order.
pub fn table_gates() -> [&'static str; 6] {
    ["cnn", "cnot", "crx(pi)", "uj12", "uj23", "uj13"]
}

fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some(body) = t.strip_prefix("pi/") {
        let denom: f64 = body
            .parse()
            .map_err(|_| Error::OutOfRange(format!("angle '{t}'")))?;
        return Ok(std::f64::consts::PI / denom);
    }
    match t {
        "pi" => Ok(std::f64::consts::PI),
        _ => t
            .parse()
            .map_err(|_| Error::OutOfRange(format!("angle '{t}'"))),
    }
}

/// Resolves a registry key ("cnot", "crx(pi)", "uj23", "refocused(2,3,1)", ...)
/// to its unitary. Indices in gate names are 1-based, as in the external
/// interface.
pub fn resolve_gate(key: &str) -> Result<GateSpec> {
    let key_norm = key.trim().to_ascii_lowercase();
    let h = InternalHamiltonian::default_three_qubit();
    let uj = |i: usize, j: usize| -> GateSpec {
        let jij = h.coupling_hz(i, j);
        let t = 1.0 / (2.0 * jij.abs());
        GateSpec {
            key: key_norm.clone(),
            n_qubits: 2,
            unitary: gate_jcoupling(0, 1, jij, t, 2).unwrap(),
            description: format!("two-qubit J evolution, J = {jij} Hz, t = 1/2|J|"),
        }
    };
    match key_norm.as_str() {
        "cnot" => Ok(GateSpec {
            key: key_norm,
            n_qubits: 2,
            unitary: gate_cnot(),
            description: "controlled-NOT".into(),
        }),
        "cnn" => Ok(GateSpec {
            key: key_norm,
            n_qubits: 3,
            unitary: gate_cnn(),
            description: "controlled-NOT-NOT".into(),
        }),
        "uj12" => Ok(uj(0, 1)),
        "uj13" => Ok(uj(0, 2)),
        "uj23" => Ok(uj(1, 2)),
        _ => {
            if let Some(body) = key_norm
                .strip_prefix("crx(")
                .and_then(|s| s.strip_suffix(')'))
            {
                let theta = parse_angle(body)?;
                return Ok(GateSpec {
                    key: key_norm.clone(),
                    n_qubits: 2,
                    unitary: gate_controlled_rx(theta),
                    description: format!("controlled Rx({theta})"),
                });
            }
            if let Some(body) = key_norm
                .strip_prefix("refocused(")
                .and_then(|s| s.strip_suffix(')'))
            {
                let parts: Vec<&str> = body.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(Error::UnknownGate(key.to_string()));
                }
                let idx: Vec<usize> = parts
                    .iter()
                    .map(|p| {
                        p.parse::<usize>()
                            .map_err(|_| Error::UnknownGate(key.to_string()))
                    })
                    .collect::<Result<_>>()?;
                if idx.iter().any(|&q| q < 1 || q > 3) {
                    return Err(Error::IndexOutOfRange(format!("gate indices in '{key}'")));
                }
                let (i, j, k) = (idx[0] - 1, idx[1] - 1, idx[2] - 1);
                let jij = h.coupling_hz(i, j);
                let t = 1.0 / (2.0 * jij.abs());
                return Ok(GateSpec {
                    key: key_norm.clone(),
                    n_qubits: 3,
                    unitary: gate_refocused_evolution(i, j, k, &h, t)?,
                    description: format!(
                        "refocused J evolution of qubits {},{} (spectator {})",
                        idx[0], idx[1], idx[2]
                    ),
                });
            }
            Err(Error::UnknownGate(key.to_string()))
        }
    }
}

/// How the CS data-ball radius is chosen per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonPolicy {
    /// ε = max(floor, inflation·‖z‖) with z the noise actually injected
    /// into the selected rows (the oracle bound).
    OracleNoise { floor: f64, inflation: f64 },
    Fixed(f64),
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        EpsilonPolicy::OracleNoise {
            floor: 1e-8,
            inflation: 1.0,
        }
    }
}

/// Plan for one fidelity-vs-data-size sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    pub gate: String,
    pub method: Method,
    pub basis: BasisKind,
    pub m_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub noise: NoiseKind,
    pub master_seed: u64,
    #[serde(default)]
    pub epsilon: EpsilonPolicy,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_trials() -> usize {
    50
}

impl SweepPlan {
    pub fn new(gate: &str, method: Method, basis: BasisKind, m_grid: Vec<usize>) -> Self {
        Self {
            gate: gate.to_string(),
            method,
            basis,
            m_grid,
            trials: default_trials(),
            noise: NoiseKind::None,
            master_seed: 0,
            epsilon: EpsilonPolicy::default(),
            solver: SolverOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::OutOfRange(
                "at least 2 trials are needed for a standard deviation".into(),
            ));
        }
        if self.m_grid.is_empty() {
            return Err(Error::EmptyInput("m grid"));
        }
        Ok(())
    }
}

/// Aggregated result of one (m, plan) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub gate: String,
    pub method: Method,
    pub basis: BasisKind,
    pub m_data: usize,
    pub mean_fidelity: f64,
    /// Standard deviation with the N−1 denominator.
    pub sigma: f64,
    pub fidelities: Vec<f64>,
    /// Trials that errored or did not converge; their fidelities are still
    /// recorded (0.0 for hard errors).
    pub failures: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Everything a sweep reuses across trials for one (gate, basis).
pub struct SweepContext {
    pub gate: GateSpec,
    pub spec: TomographySpec,
    pub basis: Arc<OperatorBasis>,
    pub ctx: ReconstructionContext,
    pub chi_ideal: ProcessMatrix,
    pub clean: Vec<Complex64>,
}

impl SweepContext {
    pub fn build(gate_key: &str, basis_kind: BasisKind) -> Result<Self> {
        let gate = resolve_gate(gate_key)?;
        let spec = TomographySpec::standard(gate.n_qubits)?;
        let basis = Arc::new(basis_for(basis_kind, &gate.unitary, gate.n_qubits)?);
        let phi = build_phi(&spec, &basis)?;
        let ctx = ReconstructionContext::new(&phi, basis.clone())?;
        let chi_ideal = chi_from_unitary(&gate.unitary, &basis)?;
        let clean = simulate_clean(&chi_ideal, &spec)?;
        Ok(Self {
            gate,
            spec,
            basis,
            ctx,
            chi_ideal,
            clean,
        })
    }

    pub fn full_size(&self) -> usize {
        self.clean.len()
    }
}

/// One trial of a sweep: noise draw, row selection, solve, fidelity.
fn run_trial(
    sc: &SweepContext,
    method: Method,
    epsilon: EpsilonPolicy,
    noise: NoiseKind,
    master_seed: u64,
    m: usize,
    trial: u64,
    opts: &SolverOptions,
) -> (f64, bool) {
    let total = sc.full_size();
    let sigma = match noise {
        NoiseKind::None => 0.0,
        NoiseKind::AdditiveGaussian { sigma } => sigma,
    };
    let (noisy, z): (Vec<Complex64>, Vec<Complex64>) = if sigma > 0.0 {
        let mut rng = seeding::stream(master_seed, seeding::purpose::NOISE, trial, 0);
        let (z, _) = gaussian_noise(total, sigma, &mut rng);
        (
            sc.clean.iter().zip(&z).map(|(a, b)| a + b).collect(),
            z,
        )
    } else {
        (sc.clean.clone(), vec![Complex64::new(0.0, 0.0); total])
    };

    let row_seed = seeding::mix(master_seed, trial);
    let rows = match subsample_rows(total, m, row_seed) {
        Ok(r) => r,
        Err(_) => return (0.0, true),
    };
    let values: Vec<Complex64> = rows.iter().map(|&r| noisy[r]).collect();

    let objective = match method {
        Method::Ls => Objective::LeastSquares,
        Method::Cs => {
            let eps = match epsilon {
                EpsilonPolicy::Fixed(e) => e,
                EpsilonPolicy::OracleNoise { floor, inflation } => {
                    let z_norm: f64 = rows
                        .iter()
                        .map(|&r| z[r].norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    (inflation * z_norm).max(floor)
                }
            };
            Objective::L1Ball { epsilon: eps }
        }
    };

    match sc.ctx.solve(Some(&rows), &values, objective, opts) {
        Ok(report) => {
            let f = fidelity(&report.chi_est, &sc.chi_ideal).unwrap_or(0.0);
            (f, !report.converged)
        }
        Err(_) => (0.0, true),
    }
}

fn aggregate(
    plan: &SweepPlan,
    m: usize,
    outcomes: Vec<(f64, bool)>,
) -> SweepRecord {
    let n = outcomes.len();
    let fidelities: Vec<f64> = outcomes.iter().map(|(f, _)| *f).collect();
    let failures = outcomes.iter().filter(|(_, failed)| *failed).count();
    let mean: f64 = fidelities.iter().sum::<f64>() / n as f64;
    let var: f64 = fidelities
        .iter()
        .map(|f| (f - mean) * (f - mean))
        .sum::<f64>()
        / (n as f64 - 1.0);
    SweepRecord {
        gate: plan.gate.clone(),
        method: plan.method,
        basis: plan.basis,
        m_data: m,
        mean_fidelity: mean,
        sigma: var.max(0.0).sqrt(),
        fidelities,
        failures,
        trials: n,
        seed: plan.master_seed,
    }
}

/// Runs `plan` against a prebuilt context (context basis/gate must match
/// the plan).
pub fn run_sweep_with_context(plan: &SweepPlan, sc: &SweepContext) -> Result<Vec<SweepRecord>> {
    plan.validate()?;
    let total = sc.full_size();
    for &m in &plan.m_grid {
        if m < 1 || m > total {
            return Err(Error::OutOfRange(format!(
                "m = {m} outside 1..={total} data points"
            )));
        }
    }
    let mut records = Vec::with_capacity(plan.m_grid.len());
    for &m in &plan.m_grid {
        let outcomes: Vec<(f64, bool)> = (0..plan.trials as u64)
            .into_par_iter()
            .map(|trial| {
                run_trial(
                    sc,
                    plan.method,
                    plan.epsilon,
                    plan.noise,
                    plan.master_seed,
                    m,
                    trial,
                    &plan.solver,
                )
            })
            .collect();
        records.push(aggregate(plan, m, outcomes));
    }
    Ok(records)
}

/// Seeded sweep over the m grid: N trials of
/// (simulate → subsample → solve → fidelity) per grid point.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRecord>> {
    let sc = SweepContext::build(&plan.gate, plan.basis)?;
    run_sweep_with_context(plan, &sc)
}

/// Smallest m in the records whose mean fidelity exceeds `level`.
/// Records must be sorted by m (as [`run_sweep`] returns them).
pub fn threshold_m(records: &[SweepRecord], level: f64) -> Result<Option<usize>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("sweep records"));
    }
    Ok(records
        .iter()
        .find(|r| r.mean_fidelity > level)
        .map(|r| r.m_data))
}

/// The four method/basis combinations, in the fixed order
/// CS-PEB, CS-PB, LS-PEB, LS-PB.
pub const METHOD_BASIS_COMBOS: [(Method, BasisKind); 4] = [
    (Method::Cs, BasisKind::PauliError),
    (Method::Cs, BasisKind::Pauli),
    (Method::Ls, BasisKind::PauliError),
    (Method::Ls, BasisKind::Pauli),
];

/// Runs the same plan for all four method/basis combinations with
/// identical seeds, so trials are paired.
pub fn compare_methods(
    gate: &str,
    m_grid: &[usize],
    trials: usize,
    noise: NoiseKind,
    master_seed: u64,
    epsilon: EpsilonPolicy,
    solver: SolverOptions,
) -> Result<Vec<Vec<SweepRecord>>> {
    let sc_peb = SweepContext::build(gate, BasisKind::PauliError)?;
    let sc_pb = SweepContext::build(gate, BasisKind::Pauli)?;
    let mut out = Vec::with_capacity(4);
    for (method, basis) in METHOD_BASIS_COMBOS {
        let plan = SweepPlan {
            gate: gate.to_string(),
            method,
            basis,
            m_grid: m_grid.to_vec(),
            trials,
            noise,
            master_seed,
            epsilon,
            solver,
        };
        let sc = match basis {
            BasisKind::PauliError => &sc_peb,
            BasisKind::Pauli => &sc_pb,
        };
        out.push(run_sweep_with_context(&plan, sc)?);
    }
    Ok(out)
}

/// Calibrates the Gaussian noise level so that full-data two-qubit LS-QPT
/// lands near `target_fidelity` (bisection on a deterministic mean over
/// `trials` paired trials of the CNOT gate).
pub fn calibrate_noise_sigma(
    target_fidelity: f64,
    trials: usize,
    master_seed: u64,
    opts: &SolverOptions,
) -> Result<f64> {
    if !(0.0 < target_fidelity && target_fidelity < 1.0) {
        return Err(Error::OutOfRange(format!(
            "target fidelity {target_fidelity}"
        )));
    }
    let sc = SweepContext::build("cnot", BasisKind::Pauli)?;
    let total = sc.full_size();
    let all_rows: Vec<usize> = (0..total).collect();
    let mean_for = |sigma: f64| -> f64 {
        let outcomes: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut rng = seeding::stream(master_seed, seeding::purpose::NOISE, trial, 1);
                let (z, _) = gaussian_noise(total, sigma, &mut rng);
                let values: Vec<Complex64> =
                    sc.clean.iter().zip(&z).map(|(a, b)| a + b).collect();
                match sc
                    .ctx
                    .solve(Some(&all_rows), &values, Objective::LeastSquares, opts)
                {
                    Ok(report) => fidelity(&report.chi_est, &sc.chi_ideal).unwrap_or(0.0),
                    Err(_) => 0.0,
                }
            })
            .collect();
        outcomes.iter().sum::<f64>() / trials as f64
    };
    let (mut lo, mut hi) = (1e-4, 0.5);
    if mean_for(lo) < target_fidelity {
        return Ok(lo);
    }
    for _ in 0..12 {
        let mid = (lo * hi).sqrt();
        if mean_for(mid) > target_fidelity {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.05 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::OutOfRange(format!("unknown format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: &str = "gate,method,basis,m_data,mean_fidelity,sigma,trials,failures,seed";

/// Writes records as CSV with the fixed column set. Deterministic given
/// the records (wall times never enter this schema).
pub fn write_csv(records: &[SweepRecord], out: &mut impl std::io::Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.gate,
            r.method.label(),
            r.basis.label(),
            r.m_data,
            r.mean_fidelity,
            r.sigma,
            r.trials,
            r.failures,
            r.seed
        )?;
    }
    Ok(())
}

pub fn records_to_json(records: &[SweepRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

pub fn records_from_json(text: &str) -> Result<Vec<SweepRecord>> {
    Ok(serde_json::from_str(text)?)
}

/// Writes records to `path` in the requested format.
pub fn export_results(
    records: &[SweepRecord],
    path: &std::path::Path,
    format: ExportFormat,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        ExportFormat::Csv => write_csv(records, &mut out)?,
        ExportFormat::Json => {
            let text = records_to_json(records)?;
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
