//! `qpt` — command-line driver for the process-tomography workbench.
//!
//! Subcommands: `simulate` (emit a data-vector JSON), `reconstruct`
//! (data + gate + method → solve report JSON), `sweep` (fidelity vs data
//! size → CSV/JSON), `diagnose` (RIP estimate and sample-size bound) and
//! `gates` (list the registry).
//!
//! Exit codes: 0 on success, 1 when the solver failed to converge on the
//! majority of trials (or a runtime error occurred), 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use qpt_core::bases::{basis_for, BasisKind};
use qpt_core::process::{chi_from_unitary, fidelity};
use qpt_core::protocol::{build_phi, SubsystemPair, TomographySpec};
use qpt_core::sim::{
    simulate_dataset, simulate_subsystem_dataset, subsample_rows, DataVector, NoiseKind,
    NoiseModel,
};
use qpt_core::solver::{
    rip_estimate, sample_size_bound, Objective, ReconstructionContext, SolverOptions,
};
use qpt_core::sweep::{
    compare_methods, export_results, gate_catalog, resolve_gate, run_sweep, threshold_m,
    EpsilonPolicy, ExportFormat, Method, SweepPlan, SweepRecord,
};

#[derive(Parser)]
#[command(name = "qpt", version, about = "Simulated quantum process tomography workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a full tomography data set and write it as JSON.
    Simulate(SimulateArgs),
    /// Reconstruct a process matrix from a data-vector JSON.
    Reconstruct(ReconstructArgs),
    /// Fidelity-vs-data-size sweep; CSV or JSON output.
    Sweep(SweepArgs),
    /// Compressed-sensing diagnostics for a gate's coefficient matrix.
    Diagnose(DiagnoseArgs),
    /// List the gate registry.
    Gates,
}

#[derive(Args)]
struct SimulateArgs {
    /// Gate key, e.g. cnot, crx(pi), cnn, uj12, refocused(2,3,1)
    #[arg(long)]
    gate: String,
    /// Gaussian noise per real component (0 = noiseless)
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prepare inputs as pseudo-pure states of this purity
    #[arg(long)]
    pps_eta: Option<f64>,
    /// Measure only this 1-based qubit pair ("12", "13", "23") of a
    /// three-qubit gate, producing two-qubit data
    #[arg(long)]
    subsystem_pair: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Data-vector JSON produced by `simulate` (or external, same schema)
    #[arg(long)]
    data: PathBuf,
    /// Target gate; fixes the configuration space, the Pauli-error basis
    /// and the ideal process used for the reported fidelity
    #[arg(long)]
    gate: String,
    #[arg(long, default_value = "cs")]
    method: String,
    #[arg(long, default_value = "peb")]
    basis: String,
    /// CS data-ball radius; defaults to the recorded noise bound
    #[arg(long)]
    epsilon: Option<f64>,
    /// Inflate the recorded noise bound by this factor
    #[arg(long, default_value_t = 1.0)]
    epsilon_inflate: f64,
    /// Subsample this many data points before solving
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Record residuals every k iterations in the report (0 = off)
    #[arg(long, default_value_t = 0)]
    history_every: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// SweepPlan JSON; other flags override its fields when given
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    gate: Option<String>,
    /// ls, cs, or all (all = the four CS/LS × PEB/PB combinations)
    #[arg(long)]
    method: Option<String>,
    /// pb, peb, or all
    #[arg(long)]
    basis: Option<String>,
    /// Comma-separated data sizes, e.g. 8,16,24; defaults to steps of 8
    /// (two qubits) or 16 (three qubits) up to 4 times the step count
    #[arg(long)]
    m_grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Fixed CS epsilon; default is the oracle noise bound per trial
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Also print the smallest m with mean fidelity above this level
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    gate: String,
    #[arg(long, default_value = "pb")]
    basis: String,
    /// Sparsity s for the RIP estimate and the sample-size bound
    #[arg(long)]
    sparsity: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = false)]
    normalize_columns: bool,
    /// Constant C0 of the sample-size bound
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Gates => cmd_gates(),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            // argument-level problems are usage errors
            match err {
                qpt_core::Error::UnknownGate(_)
                | qpt_core::Error::OutOfRange(_)
                | qpt_core::Error::InvalidPair(_)
                | qpt_core::Error::UnsupportedSize(_, _) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn noise_model(sigma: f64, seed: u64) -> qpt_core::Result<NoiseModel> {
    if sigma > 0.0 {
        NoiseModel::gaussian(sigma, seed)
    } else {
        Ok(NoiseModel::none())
    }
}

fn cmd_simulate(args: SimulateArgs) -> qpt_core::Result<ExitCode> {
    let gate = resolve_gate(&args.gate)?;
    let noise = noise_model(args.noise_sigma, args.seed)?;
    let data = match &args.subsystem_pair {
        Some(pair_name) => {
            let pair = SubsystemPair::parse(pair_name)?;
            if gate.n_qubits != 3 {
                return Err(qpt_core::Error::DimensionMismatch(
                    "subsystem simulation needs a three-qubit gate".into(),
                ));
            }
            let spec2 = match args.pps_eta {
                Some(eta) => TomographySpec::standard_with_pps(2, eta)?,
                None => TomographySpec::standard(2)?,
            };
            simulate_subsystem_dataset(&gate.unitary, pair, &spec2, &noise)?
        }
        None => {
            let spec = match args.pps_eta {
                Some(eta) => TomographySpec::standard_with_pps(gate.n_qubits, eta)?,
                None => TomographySpec::standard(gate.n_qubits)?,
            };
            let basis = Arc::new(basis_for(BasisKind::Pauli, &gate.unitary, gate.n_qubits)?);
            let chi = chi_from_unitary(&gate.unitary, &basis)?;
            simulate_dataset(&chi, &spec, &noise)?
        }
    };
    std::fs::write(&args.out, data.to_json()?)?;
    eprintln!(
        "wrote {} data points (epsilon = {:.3e}) to {}",
        data.len(),
        data.noise_bound(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_reconstruct(args: ReconstructArgs) -> qpt_core::Result<ExitCode> {
    let gate = resolve_gate(&args.gate)?;
    let method: Method = args.method.parse()?;
    let basis_kind: BasisKind = args.basis.parse()?;

    let text = std::fs::read_to_string(&args.data)?;
    let data = DataVector::from_json(&text)?;

    // the data may target the two-qubit layout even for a 3-qubit gate
    // (subsystem runs); infer the protocol from the data size
    let spec = match data.len() {
        256 => TomographySpec::standard(2)?,
        5376 => TomographySpec::standard(3)?,
        other => {
            return Err(qpt_core::Error::DimensionMismatch(format!(
                "data has {other} points; expected a full 256- or 5376-point set"
            )))
        }
    };
    let n_qubits = spec.n_qubits();
    if gate.n_qubits != n_qubits {
        return Err(qpt_core::Error::DimensionMismatch(format!(
            "gate '{}' acts on {} qubits but the data is {}-qubit",
            gate.key, gate.n_qubits, n_qubits
        )));
    }
    let basis = Arc::new(basis_for(basis_kind, &gate.unitary, n_qubits)?);
    let phi = build_phi(&spec, &basis)?;
    let ctx = ReconstructionContext::new(&phi, basis.clone())?;

    let (rows, values): (Vec<usize>, Vec<_>) = match args.m {
        Some(m) => {
            let rows = subsample_rows(data.len(), m, args.seed)?;
            let values = rows.iter().map(|&r| data.values()[r]).collect();
            (rows, values)
        }
        None => ((0..data.len()).collect(), data.values().to_vec()),
    };

    let objective = match method {
        Method::Ls => Objective::LeastSquares,
        Method::Cs => {
            let epsilon = args
                .epsilon
                .unwrap_or_else(|| (data.noise_bound() * args.epsilon_inflate).max(1e-8));
            Objective::L1Ball { epsilon }
        }
    };
    let opts = SolverOptions {
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
        history_every: args.history_every,
        ..SolverOptions::default()
    };
    let report = ctx.solve(Some(&rows), &values, objective, &opts)?;
    let chi_ideal = chi_from_unitary(&gate.unitary, &basis)?;
    let f = fidelity(&report.chi_est, &chi_ideal)?;
    std::fs::write(&args.out, report.to_json()?)?;
    eprintln!(
        "m = {}, converged = {}, fidelity vs ideal {} = {:.6}",
        rows.len(),
        report.converged,
        gate.key,
        f
    );
    if report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn default_m_grid(n_qubits: usize) -> Vec<usize> {
    let step = if n_qubits == 2 { 8 } else { 16 };
    (1..=32).map(|k| k * step).collect()
}

fn parse_m_grid(text: &str) -> qpt_core::Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| qpt_core::Error::OutOfRange(format!("m value '{tok}'")))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> qpt_core::Result<ExitCode> {
    let mut plan = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<SweepPlan>(&text)?
        }
        None => {
            let gate = args.gate.clone().ok_or(qpt_core::Error::OutOfRange(
                "either --config or --gate is required".into(),
            ))?;
            let mut p = SweepPlan::new(&gate, Method::Cs, BasisKind::PauliError, vec![]);
            p.solver.tolerance = 1e-6;
            p
        }
    };
    if let Some(gate) = &args.gate {
        plan.gate = gate.clone();
    }
    let all_methods = matches!(args.method.as_deref(), Some("all"))
        || matches!(args.basis.as_deref(), Some("all"));
    if let Some(m) = &args.method {
        if m != "all" {
            plan.method = m.parse()?;
        }
    }
    if let Some(b) = &args.basis {
        if b != "all" {
            plan.basis = b.parse()?;
        }
    }
    if let Some(t) = args.trials {
        plan.trials = t;
    }
    if let Some(s) = args.seed {
        plan.master_seed = s;
    }
    if let Some(sigma) = args.noise_sigma {
        plan.noise = if sigma > 0.0 {
            NoiseKind::AdditiveGaussian { sigma }
        } else {
            NoiseKind::None
        };
    }
    if let Some(e) = args.epsilon {
        plan.epsilon = EpsilonPolicy::Fixed(e);
    }
    match &args.m_grid {
        Some(text) => plan.m_grid = parse_m_grid(text)?,
        None if plan.m_grid.is_empty() => {
            let gate = resolve_gate(&plan.gate)?;
            plan.m_grid = default_m_grid(gate.n_qubits);
        }
        None => {}
    }

    let format: ExportFormat = args.format.parse()?;
    let records: Vec<SweepRecord> = if all_methods {
        compare_methods(
            &plan.gate,
            &plan.m_grid,
            plan.trials,
            plan.noise,
            plan.master_seed,
            plan.epsilon,
            plan.solver,
        )?
        .into_iter()
        .flatten()
        .collect()
    } else {
        run_sweep(&plan)?
    };
    export_results(&records, &args.out, format)?;
    eprintln!("wrote {} records to {}", records.len(), args.out.display());
    if let Some(level) = args.threshold {
        match threshold_m(&records, level)? {
            Some(m) => println!("threshold m_data for mean fidelity > {level}: {m}"),
            None => println!("mean fidelity never exceeds {level} on this grid"),
        }
    }

    let total_trials: usize = records.iter().map(|r| r.trials).sum();
    let total_failures: usize = records.iter().map(|r| r.failures).sum();
    if 2 * total_failures > total_trials {
        eprintln!("solver failed on {total_failures}/{total_trials} trials");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagnose(args: DiagnoseArgs) -> qpt_core::Result<ExitCode> {
    let gate = resolve_gate(&args.gate)?;
    let basis_kind: BasisKind = args.basis.parse()?;
    let basis = Arc::new(basis_for(basis_kind, &gate.unitary, gate.n_qubits)?);
    let spec = TomographySpec::standard(gate.n_qubits)?;
    let phi = build_phi(&spec, &basis)?;
    let delta = rip_estimate(&phi, args.sparsity, args.trials, args.seed, args.normalize_columns)?;
    let bound = sample_size_bound(args.sparsity, 1 << gate.n_qubits, args.c0)?;
    let threshold = std::f64::consts::SQRT_2 - 1.0;
    let out = serde_json::json!({
        "gate": gate.key,
        "basis": basis_kind.label(),
        "phi_rows": phi.rows(),
        "phi_cols": phi.cols(),
        "sparsity": args.sparsity,
        "rip_trials": args.trials,
        "normalize_columns": args.normalize_columns,
        "delta_s_estimate": delta,
        "delta_threshold": threshold,
        "delta_below_threshold": delta < threshold,
        "c0": args.c0,
        "sample_size_bound": bound,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(ExitCode::SUCCESS)
}

fn cmd_gates() -> qpt_core::Result<ExitCode> {
    println!("{:<18} {:>8}  {}", "name", "qubits", "description");
    for entry in gate_catalog() {
        println!(
            "{:<18} {:>8}  {}",
            entry.name, entry.n_qubits, entry.description
        );
    }
    Ok(ExitCode::SUCCESS)
}
