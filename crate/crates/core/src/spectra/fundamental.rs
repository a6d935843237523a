//! Per-edge fundamental systems in an orthonormalized, overflow-free form.
//!
//! The solution space of `(A - lambda) u = 0` on an edge is stored as the
//! stacked scaled jets `[Y(0); Y(len)]` of some basis with orthonormal columns.
//! The canonical basis, whose true left jets are the identity, equals the
//! stored basis times a matrix `T`; only `log det T` is kept, which is all the
//! secular determinant needs.

use crate::error::{Error, Result};
use crate::graph::BoundaryContactProblem;
use crate::numeric::linalg::{self, CMat, LogDet, C64};
use crate::numeric::ode::{self, StepControl};

use super::{jet_scale, scaled_companion, triangular_log_det, SolverOptions};

#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    pub edge: usize,
    pub lambda: C64,
    pub kappa: f64,
    /// Scaled jets `u^(k) / kappa^k` at the left end; row blocks indexed by `k`.
    pub left: CMat,
    /// Scaled inward jets at the right end.
    pub right: CMat,
    /// `log det T` where canonical basis = stored basis * `T`.
    pub log_det_t: LogDet,
}

impl FundamentalSystem {
    /// `diag(kappa^k)` over jet orders, each repeated `r` times.
    fn scaling(&self, r: usize) -> CMat {
        let dim = self.left.nrows();
        CMat::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(self.kappa.powi((i / r) as i32), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// True inward right-end jets of the canonical basis (left jets = identity).
    ///
    /// Forms an inverse, so only meaningful where the edge is not too stiff.
    pub fn canonical_right_jets(&self, r: usize) -> CMat {
        let d = self.scaling(r);
        let left = &d * &self.left;
        let inv = linalg::inverse(&left).expect("left jets of a fundamental system are invertible");
        &d * &self.right * inv
    }
}

fn log_det_mul(a: LogDet, b: LogDet) -> LogDet {
    LogDet {
        log_abs: a.log_abs + b.log_abs,
        phase: a.phase * b.phase,
    }
}

/// Replaces `s` by the `Q` factor of its thin QR and folds `R` into `acc`.
fn reorthonormalize(s: &mut CMat, acc: &mut LogDet) {
    let qr = s.clone().qr();
    let r = qr.r();
    *acc = log_det_mul(*acc, triangular_log_det(&r));
    *s = qr.q();
}

pub fn fundamental_system(
    problem: &BoundaryContactProblem,
    edge: usize,
    lambda: C64,
    opts: &SolverOptions,
) -> Result<FundamentalSystem> {
    let op = &problem.operators[edge];
    let len = problem.graph.edges[edge].length;
    let m = op.order;
    let r = op.rank;
    let dim = m * r;
    let kappa = jet_scale(lambda, m);

    // Canonical initial data: true left jets identity, scaled jets diag(kappa^-k).
    let mut s = CMat::zeros(2 * dim, dim);
    for i in 0..dim {
        let v = C64::new(kappa.powi(-((i / r) as i32)), 0.0);
        s[(i, i)] = v;
        s[(dim + i, i)] = v;
    }
    let mut acc = LogDet {
        log_abs: 0.0,
        phase: C64::new(1.0, 0.0),
    };
    reorthonormalize(&mut s, &mut acc);

    if op.is_constant() && !opts.force_numeric {
        let k = scaled_companion(op, 0.0, lambda, kappa);
        let growth = linalg::eigenvalues(&k)
            .iter()
            .map(|z| z.re.abs())
            .fold(0.0, f64::max);
        let steps = ((len * growth).ceil() as usize).max(1);
        let e = linalg::expm(&(k * C64::new(len / steps as f64, 0.0)));
        for _ in 0..steps {
            let bottom = &e * s.rows(dim, dim);
            s.rows_mut(dim, dim).copy_from(&bottom);
            reorthonormalize(&mut s, &mut acc);
        }
    } else {
        let ctl = StepControl {
            rtol: 1e-10,
            atol: 1e-13,
            h_max: 1.0 / (1.0 + kappa),
        };
        let mut h = 0.0;
        let limit = std::f64::consts::E;
        let rhs = |x: f64, y: &CMat| {
            let k = scaled_companion(op, x, lambda, kappa);
            let mut out = CMat::zeros(2 * dim, dim);
            out.rows_mut(dim, dim).copy_from(&(k * y.rows(dim, dim)));
            out
        };
        let mut pending = acc;
        ode::integrate(rhs, 0.0, len, &mut s, &mut h, &ctl, |y| {
            if y.column_iter().any(|c| c.norm() > limit) {
                reorthonormalize(y, &mut pending);
            }
        })
        .map_err(|u| Error::StiffEdge {
            edge: problem.graph.edges[edge].id.clone(),
            x: u.0,
        })?;
        acc = pending;
        reorthonormalize(&mut s, &mut acc);
    }

    let left = s.rows(0, dim).into_owned();
    let mut right = s.rows(dim, dim).into_owned();
    for k in (1..m).step_by(2) {
        let mut blk = right.rows_mut(k * r, r);
        blk.neg_mut();
    }
    Ok(FundamentalSystem {
        edge,
        lambda,
        kappa,
        left,
        right,
        log_det_t: acc,
    })
}
