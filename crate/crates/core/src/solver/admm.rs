//! Consensus operator-splitting engine.
//!
//! The program is split over copies of the coordinate vector u:
//!
//!   minimize  [‖χ(u₁)‖₁] + I_PSD(u₂) + I_TP(u₃) + g(y)
//!   subject to uⱼ = z for all j,  y = Āz
//!
//! with g either ½‖y − b̄‖² (least squares) or the indicator of the l2
//! ball ‖y − b̄‖ ≤ ε (compressed sensing). Every proximal step is closed
//! form; the z-step solves (J·I + ĀᵀĀ)z = rhs with a Cholesky factor
//! cached once per solve (through the Woodbury identity when the system
//! is wide). The penalty ρ cancels out of the z-step, so residual
//! balancing never refactorizes.

use crate::linalg::{axpy, dot, norm2, Cholesky, RealMatrix};
use crate::Result;

use super::embed::{ball_project, HermitianCoords, TpProjector};
use super::{ResidualSample, SolverOptions};
use crate::error::Error;

/// Data-fit term of the program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// minimize ½‖Āu − b̄‖² subject to the structure constraints (LS-QPT)
    LeastSquares,
    /// minimize ‖vec χ‖₁ subject to ‖Āu − b̄‖ ≤ ε and the structure
    /// constraints (CS-QPT)
    L1Ball { epsilon: f64 },
}

/// Slack allowed on the data residual of a converged CS solve.
pub const DATA_SLACK: f64 = 1e-6;

const ALPHA: f64 = 1.0;
/// Penalty rebalancing cadence; adaptation also stops at the midpoint of
/// the run so the fixed-penalty convergence guarantee applies to the tail.
const ADAPT_EVERY: usize = 50;

pub(crate) struct ProblemRef<'a> {
    pub a: &'a RealMatrix,
    pub b: &'a [f64],
    pub coords: &'a HermitianCoords,
    pub tp: &'a TpProjector,
    pub objective: Objective,
}

pub(crate) struct Outcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub data_residual: f64,
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
    pub l1_value: f64,
    pub history: Vec<ResidualSample>,
}

enum ZSolver {
    /// rows > cols: factor of J·I + ĀᵀĀ
    Tall(Cholesky),
    /// rows ≤ cols: factor of J·I + ĀĀᵀ, applied through Woodbury
    Wide(Cholesky),
    /// no data rows at all
    Empty,
}

impl ZSolver {
    fn build(a: &RealMatrix, j_blocks: f64) -> Self {
        if a.rows() == 0 {
            return ZSolver::Empty;
        }
        if a.rows() > a.cols() {
            let mut g = a.gram();
            for i in 0..g.rows() {
                let v = g.get(i, i) + j_blocks;
                g.set(i, i, v);
            }
            ZSolver::Tall(Cholesky::new(&g).expect("J·I + ĀᵀĀ is positive definite"))
        } else {
            let mut g = a.gram_t();
            for i in 0..g.rows() {
                let v = g.get(i, i) + j_blocks;
                g.set(i, i, v);
            }
            ZSolver::Wide(Cholesky::new(&g).expect("J·I + ĀĀᵀ is positive definite"))
        }
    }

    fn solve(&self, a: &RealMatrix, rhs: &[f64], j_blocks: f64) -> Vec<f64> {
        match self {
            ZSolver::Tall(chol) => chol.solve(rhs),
            ZSolver::Wide(chol) => {
                let t = a.matvec(rhs);
                let s = chol.solve(&t);
                let back = a.matvec_t(&s);
                rhs.iter()
                    .zip(&back)
                    .map(|(r, c)| (r - c) / j_blocks)
                    .collect()
            }
            ZSolver::Empty => rhs.iter().map(|r| r / j_blocks).collect(),
        }
    }
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Alternating projections onto the TP affine set and the PSD cone,
/// ending on a PSD projection so the reported point has no negative
/// spectrum beyond roundoff.
pub(crate) fn polish(
    u: &mut [f64],
    coords: &HermitianCoords,
    tp: &TpProjector,
    tp_tol: f64,
) -> f64 {
    let mut tp_res = 0.0;
    for _ in 0..500 {
        tp.project(u);
        coords.psd_project(u);
        tp_res = tp.residual(u);
        if tp_res <= 0.5 * tp_tol {
            break;
        }
    }
    tp_res
}

pub(crate) fn run(problem: &ProblemRef<'_>, opts: &SolverOptions) -> Result<Outcome> {
    let coords = problem.coords;
    let tp = problem.tp;
    let a = problem.a;
    let b = problem.b;
    let n = coords.len();
    let r_rows = a.rows();
    assert_eq!(b.len(), r_rows);

    let with_l1 = matches!(problem.objective, Objective::L1Ball { .. });
    let j_blocks = if with_l1 { 3usize } else { 2usize };
    let jf = j_blocks as f64;
    let zsolver = ZSolver::build(a, jf);

    let b_norm = norm2(b);
    let mut rho = opts.penalty;

    // start from the maximally mixed channel χ = I/D: feasible for both
    // structure constraints
    let side = coords.side();
    let mut z = vec![0.0; n];
    for zi in z[..side].iter_mut() {
        *zi = 1.0 / side as f64;
    }
    let mut az = a.matvec(&z);

    let mut xs: Vec<Vec<f64>> = vec![z.clone(); j_blocks];
    let mut ws: Vec<Vec<f64>> = vec![vec![0.0; n]; j_blocks];
    let mut y = az.clone();
    let mut wy = vec![0.0; r_rows];

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut best_candidate: Option<Vec<f64>> = None;

    let mut gap_mid = f64::INFINITY;
    let mut gap_last = f64::INFINITY;

    for iter in 1..=opts.max_iterations {
        iterations = iter;

        // block proximal updates from the current consensus point
        for (j, x) in xs.iter_mut().enumerate() {
            x.copy_from_slice(&z);
            for (xi, wi) in x.iter_mut().zip(&ws[j]) {
                *xi -= wi;
            }
            let block = if with_l1 { j } else { j + 1 };
            match block {
                0 => coords.l1_prox(x, 1.0 / rho),
                1 => {
                    coords.psd_project(x);
                }
                _ => tp.project(x),
            }
        }
        for (yi, (ai, wi)) in y.iter_mut().zip(az.iter().zip(&wy)) {
            *yi = ai - wi;
        }
        match problem.objective {
            Objective::LeastSquares => {
                for (yi, bi) in y.iter_mut().zip(b) {
                    *yi = (bi + rho * *yi) / (1.0 + rho);
                }
            }
            Objective::L1Ball { epsilon } => ball_project(&mut y, b, epsilon),
        }

        // z-step on the over-relaxed combination
        let mut rhs = vec![0.0; n];
        for (j, x) in xs.iter().enumerate() {
            for i in 0..n {
                rhs[i] += ALPHA * x[i] + (1.0 - ALPHA) * z[i] + ws[j][i];
            }
        }
        let y_relaxed: Vec<f64> = y
            .iter()
            .zip(&az)
            .zip(&wy)
            .map(|((yi, ai), wi)| ALPHA * yi + (1.0 - ALPHA) * ai + wi)
            .collect();
        if r_rows > 0 {
            let at_y = a.matvec_t(&y_relaxed);
            axpy(&mut rhs, 1.0, &at_y);
        }
        let z_new = zsolver.solve(a, &rhs, jf);
        let az_new = if r_rows > 0 { a.matvec(&z_new) } else { Vec::new() };

        // dual ascent on the relaxed residuals
        for (j, x) in xs.iter().enumerate() {
            for i in 0..n {
                ws[j][i] += ALPHA * x[i] + (1.0 - ALPHA) * z[i] - z_new[i];
            }
        }
        for i in 0..r_rows {
            wy[i] += ALPHA * y[i] + (1.0 - ALPHA) * az[i] - az_new[i];
        }

        let dz = diff_norm(&z_new, &z);
        let dadz = diff_norm(&az_new, &az);
        z = z_new;
        az = az_new;

        if iter % opts.check_every != 0 && iter != opts.max_iterations {
            continue;
        }

        // residuals (Boyd-style with relative scaling)
        let mut primal_sq = 0.0;
        let mut x_norm_sq = 0.0;
        let mut w_norm_sq = 0.0;
        for (j, x) in xs.iter().enumerate() {
            primal_sq += diff_norm(x, &z).powi(2);
            x_norm_sq += dot(x, x);
            w_norm_sq += dot(&ws[j], &ws[j]);
        }
        primal_sq += diff_norm(&y, &az).powi(2);
        x_norm_sq += dot(&y, &y);
        w_norm_sq += dot(&wy, &wy);
        let primal = primal_sq.sqrt();
        let dual = rho * (jf * dz * dz + dadz * dadz).sqrt();

        let fz_norm = (jf * dot(&z, &z) + dot(&az, &az)).sqrt();
        let dim_x = (j_blocks * n + r_rows) as f64;
        let eps_pri =
            dim_x.sqrt() * opts.tolerance + opts.tolerance * x_norm_sq.sqrt().max(fz_norm);
        let eps_dual =
            dim_x.sqrt() * opts.tolerance + opts.tolerance * rho * w_norm_sq.sqrt();

        let data_res_z = if r_rows > 0 { diff_norm(&az, b) } else { 0.0 };

        if opts.history_every > 0 && iter % opts.history_every == 0 {
            history.push(ResidualSample {
                iteration: iter,
                primal,
                dual,
                data_l2: data_res_z,
                l1_value: coords.l1_value(&z),
                rho,
            });
        }

        if let Objective::L1Ball { epsilon } = problem.objective {
            let gap = (data_res_z - epsilon).max(0.0);
            if iter >= opts.max_iterations / 2 && gap_mid.is_infinite() {
                gap_mid = gap;
            }
            gap_last = gap;
        }

        if primal <= eps_pri && dual <= eps_dual {
            // candidate must actually satisfy the feasibility tolerances
            let mut cand = z.clone();
            let tp_res = polish(&mut cand, coords, tp, opts.tp_tol);
            let data_res = if r_rows > 0 {
                diff_norm(&a.matvec(&cand), b)
            } else {
                0.0
            };
            let data_ok = match problem.objective {
                Objective::LeastSquares => true,
                Objective::L1Ball { epsilon } => data_res <= epsilon + DATA_SLACK,
            };
            if tp_res <= opts.tp_tol && data_ok {
                converged = true;
                best_candidate = Some(cand);
                break;
            }
        }

        if opts.adapt_penalty
            && iter % ADAPT_EVERY == 0
            && iter < opts.max_iterations / 2
        {
            let rel_r = primal / eps_pri.max(1e-300);
            let rel_s = dual / eps_dual.max(1e-300);
            if rel_r > 10.0 * rel_s && rho < 1e6 {
                rho *= 2.0;
                for w in ws.iter_mut() {
                    for wi in w.iter_mut() {
                        *wi *= 0.5;
                    }
                }
                for wi in wy.iter_mut() {
                    *wi *= 0.5;
                }
            } else if rel_s > 10.0 * rel_r && rho > 1e-6 {
                rho *= 0.5;
                for w in ws.iter_mut() {
                    for wi in w.iter_mut() {
                        *wi *= 2.0;
                    }
                }
                for wi in wy.iter_mut() {
                    *wi *= 2.0;
                }
            }
        }
    }

    // infeasibility certificate: the data gap stalled well above the
    // tolerance for the whole second half of the run
    if !converged {
        if let Objective::L1Ball { epsilon } = problem.objective {
            let floor = (1e-3 * b_norm.max(1.0)).max(100.0 * opts.tolerance);
            if gap_last > floor && gap_last > 0.9 * gap_mid {
                return Err(Error::Infeasible {
                    attainable: gap_last + epsilon,
                    epsilon,
                });
            }
        }
    }

    let u = best_candidate.unwrap_or_else(|| {
        let mut cand = z.clone();
        polish(&mut cand, coords, tp, opts.tp_tol);
        cand
    });
    // the polish ends on a PSD projection; measure the final residuals on
    // the reported point
    let tp_residual = tp.residual(&u);
    let min_eigenvalue = coords.min_eigenvalue(&u);
    let data_residual = if r_rows > 0 {
        diff_norm(&a.matvec(&u), b)
    } else {
        0.0
    };
    let l1_value = coords.l1_value(&u);
    if r_rows == 0 {
        converged = false;
    }
    if min_eigenvalue < -opts.psd_tol || tp_residual > opts.tp_tol {
        converged = false;
    }
    // guard against drift in the last projection
    if converged {
        if let Objective::L1Ball { epsilon } = problem.objective {
            if data_residual > epsilon + DATA_SLACK {
                converged = false;
            }
        }
    }

    Ok(Outcome {
        u,
        iterations,
        converged,
        data_residual,
        min_eigenvalue,
        tp_residual,
        l1_value,
        history,
    })
}
