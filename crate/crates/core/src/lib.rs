//! Simulated quantum process tomography (QPT) for two- and three-qubit gates.
//!
//! The crate provides the full tomography pipeline:
//!
//! * [`bases`] — Pauli and Pauli-error operator bases,
//! * [`gates`] — the gate library (CNOT, controlled rotations, J-coupling
//!   evolutions, refocused evolutions) and the internal spin Hamiltonian,
//! * [`process`] — the χ process-matrix model, fidelity and validity checks,
//! * [`protocol`] — tomographically complete configuration spaces and the
//!   coefficient matrix Φ mapping vectorized χ to ideal data,
//! * [`sim`] — forward simulation of measurement data with seeded noise,
//!   pseudo-pure input states and row subsampling,
//! * [`solver`] — the constrained least-squares (LS-QPT) and compressed
//!   sensing (CS-QPT) convex programs, solved by operator splitting, plus
//!   sparse-recovery diagnostics,
//! * [`sweep`] — seeded fidelity-vs-data-size sweeps, method comparison
//!   tables and CSV/JSON export.

pub mod bases;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod process;
pub mod protocol;
pub mod seeding;
pub mod sim;
pub mod solver;
pub mod sweep;

pub use bases::{pauli_basis, pauli_error_basis, BasisKind, OperatorBasis};
pub use error::Error;
pub use linalg::ComplexMatrix;
pub use process::{ChiVector, ProcessMatrix};
pub use protocol::{CoefficientMatrix, Configuration, TomographySpec};
pub use sim::{DataVector, NoiseModel};
pub use solver::{cs_qpt, ls_qpt, SolveReport, SolverOptions};
pub use sweep::{Method, SweepPlan, SweepRecord};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
