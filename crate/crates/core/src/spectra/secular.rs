//! The secular matrix: all vertex rows applied to the edge fundamental systems.

use crate::error::Result;
use crate::graph::{BoundaryContactProblem, Side};
use crate::numeric::linalg::{self, CMat, LogDet, C64};

use super::{fundamental_system, FundamentalSystem, SolverOptions};

/// Normalized singular values below this count towards the multiplicity.
pub const MULTIPLICITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SecularMatrix {
    pub lambda: C64,
    /// Rows grouped by vertex, columns by edge, each row scaled to unit norm.
    pub matrix: CMat,
    /// Per-edge `log det T`, the column scaling towards the canonical basis.
    pub column_log_scales: Vec<LogDet>,
    /// Determinant of the canonical matrix (true left jets identity on every edge);
    /// `None` when the matrix is not square.
    pub log_det: Option<LogDet>,
}

impl SecularMatrix {
    /// `sigma_i / sigma_max` in descending order.
    pub fn normalized_singular_values(&self) -> Vec<f64> {
        let sv = linalg::singular_values(&self.matrix);
        let max = sv.first().copied().unwrap_or(0.0);
        if max == 0.0 {
            return vec![0.0; sv.len()];
        }
        sv.iter().map(|s| s / max).collect()
    }

    /// Smallest normalized singular value; zero for non-square matrices.
    pub fn sigma_hat(&self) -> f64 {
        if self.matrix.nrows() != self.matrix.ncols() {
            return 0.0;
        }
        self.normalized_singular_values()
            .last()
            .copied()
            .unwrap_or(0.0)
    }

    pub fn nullity(&self, threshold: f64) -> usize {
        let sv = self.normalized_singular_values();
        let deficit = self.matrix.ncols().saturating_sub(sv.len());
        deficit + sv.iter().filter(|&&s| s < threshold).count()
    }

    /// Unit-modulus phase of the canonical determinant.
    pub fn phase(&self) -> Option<C64> {
        self.log_det.map(|d| d.phase)
    }
}

pub(crate) fn assemble(
    problem: &BoundaryContactProblem,
    systems: &[FundamentalSystem],
    lambda: C64,
) -> SecularMatrix {
    let m = problem.order();
    let r = problem.rank();
    let dim = m * r;
    let ncols = dim * problem.graph.edges.len();
    let nrows = problem.total_rows();
    let mut g = CMat::zeros(nrows, ncols);
    let kappa = systems.first().map(|s| s.kappa).unwrap_or(1.0);
    let kpow: Vec<f64> = (0..m).map(|k| kappa.powi(k as i32)).collect();
    let mut row0 = 0;
    for (v, cc) in problem.couplings.iter().enumerate() {
        for (pi, ep) in problem.graph.vertices[v].endpoints.iter().enumerate() {
            let fs = &systems[ep.edge];
            let jets = match ep.side {
                Side::Left => &fs.left,
                Side::Right => &fs.right,
            };
            for (k, block) in cc.blocks.iter().enumerate() {
                for row in 0..cc.rows {
                    for f in 0..r {
                        let coef = block[(row, pi * r + f)] * kpow[k];
                        if coef == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for col in 0..dim {
                            g[(row0 + row, ep.edge * dim + col)] += coef * jets[(k * r + f, col)];
                        }
                    }
                }
            }
        }
        row0 += cc.rows;
    }
    let mut log_abs = 0.0;
    for i in 0..nrows {
        let n = g.row(i).norm();
        if n > 0.0 {
            g.row_mut(i).unscale_mut(n);
            log_abs += n.ln();
        }
    }
    let column_log_scales: Vec<LogDet> = systems.iter().map(|s| s.log_det_t).collect();
    let log_det = (nrows == ncols).then(|| {
        let d = linalg::log_det(&g);
        let mut out = LogDet {
            log_abs: d.log_abs + log_abs,
            phase: d.phase,
        };
        for t in &column_log_scales {
            out.log_abs += t.log_abs;
            out.phase *= t.phase;
        }
        out.phase = out.phase.unscale(out.phase.norm());
        out
    });
    SecularMatrix {
        lambda,
        matrix: g,
        column_log_scales,
        log_det,
    }
}

pub fn secular_matrix(
    problem: &BoundaryContactProblem,
    lambda: C64,
    opts: &SolverOptions,
) -> Result<SecularMatrix> {
    let systems = (0..problem.graph.edges.len())
        .map(|e| fundamental_system(problem, e, lambda, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(problem, &systems, lambda))
}

/// Nullity of the normalized secular matrix at `lambda`.
pub fn multiplicity(
    problem: &BoundaryContactProblem,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<usize> {
    Ok(secular_matrix(problem, C64::new(lambda, 0.0), opts)?.nullity(MULTIPLICITY_THRESHOLD))
}
