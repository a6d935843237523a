//! Spectra and resolvents of the realization `A_C`.
//!
//! Everything here works with scaled jets `u^(k) / kappa^k`, `kappa =
//! max(1, |lambda|^(1/m))`, so that the first-order companion system has
//! entries of size `kappa` regardless of the order.

mod fundamental;
mod masses;
mod resolvent;
mod secular;
mod shooting;
mod sweep;

pub use fundamental::{fundamental_system, FundamentalSystem};
pub use masses::{eigenfunction_edge_masses, eigenfunctions, Eigenfunctions};
pub use resolvent::{resolvent_norm, solve_resolvent, EdgeFunction, ResolventSolution};
pub use secular::{multiplicity, secular_matrix, SecularMatrix, MULTIPLICITY_THRESHOLD};
pub use sweep::{
    default_lambda_lo, eigenvalues, solver_params, weyl_coefficient, CertificateEntry, Eigenvalue,
    SolverParams, Spectrum, ROOT_TOLERANCE,
};

use crate::graph::{BoundaryContactProblem, EdgeOperator};
use crate::numeric::linalg::{self, CMat, LogDet, C64};

/// Knobs shared by the sweep, the secular matrix and the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Integrate every edge numerically even when its coefficients are constant.
    pub force_numeric: bool,
    /// Grid points per expected eigenvalue in the sweep variable.
    pub oversample: usize,
    pub lambda_lo: Option<f64>,
    pub max_refinements: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            force_numeric: false,
            oversample: 16,
            lambda_lo: None,
            max_refinements: 4,
        }
    }
}

pub(crate) fn jet_scale(lambda: C64, m: usize) -> f64 {
    lambda.norm().powf(1.0 / m as f64).max(1.0)
}

/// Companion matrix of `(A - lambda) u = 0` in scaled jets at `x`.
pub(crate) fn scaled_companion(op: &EdgeOperator, x: f64, lambda: C64, kappa: f64) -> CMat {
    let m = op.order;
    let r = op.rank;
    let dim = m * r;
    let mut k = CMat::zeros(dim, dim);
    for b in 0..m - 1 {
        for i in 0..r {
            k[(b * r + i, (b + 1) * r + i)] = C64::new(kappa, 0.0);
        }
    }
    let inv = linalg::inverse(&op.leading(x)).expect("leading coefficient checked invertible");
    for j in 0..m {
        let mut blk = -op.coefficient(j, x);
        if j == 0 {
            for i in 0..r {
                blk[(i, i)] += lambda;
            }
        }
        let s = kappa.powi(j as i32 - (m as i32 - 1));
        let blk = &inv * blk * C64::new(s, 0.0);
        k.view_mut(((m - 1) * r, j * r), (r, r)).copy_from(&blk);
    }
    k
}

/// Largest `|Re|` of the eigenvalues of the scaled companion over sample points of an edge.
pub(crate) fn growth_rate(
    problem: &BoundaryContactProblem,
    edge: usize,
    lambda: C64,
    kappa: f64,
) -> f64 {
    let op = &problem.operators[edge];
    let len = problem.graph.edges[edge].length;
    let xs: Vec<f64> = if op.is_constant() {
        vec![0.0]
    } else {
        (0..=8).map(|i| len * i as f64 / 8.0).collect()
    };
    xs.iter()
        .map(|&x| {
            linalg::eigenvalues(&scaled_companion(op, x, lambda, kappa))
                .iter()
                .map(|z| z.re.abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `log det` of an upper-triangular matrix.
pub(crate) fn triangular_log_det(r: &CMat) -> LogDet {
    let mut log_abs = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for i in 0..r.nrows() {
        let d = r[(i, i)];
        let a = d.norm();
        if a == 0.0 {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase,
            };
        }
        log_abs += a.ln();
        phase *= d.unscale(a);
    }
    LogDet {
        log_abs,
        phase: phase.unscale(phase.norm()),
    }
}
