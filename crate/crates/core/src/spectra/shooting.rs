//! Multiple shooting for `(A - lambda) u = f` with the vertex rows as boundary conditions.
//!
//! Each edge is cut into segments on which the scaled companion system grows
//! by at most `e^2`. The unknowns are the scaled jets at every segment start;
//! continuity between segments and the vertex rows close the linear system.

use crate::error::{Error, Result};
use crate::graph::{BoundaryContactProblem, Side};
use crate::numeric::linalg::{self, CMat, C64, ZERO};
use crate::numeric::ode::{self, StepControl};

use super::{growth_rate, jet_scale, scaled_companion};

/// Right-hand side `f(edge, x)` as an `r x 1` column.
pub(crate) type Source<'a> = &'a (dyn Fn(usize, f64) -> CMat + Sync);

struct Segment {
    x0: f64,
    x1: f64,
    /// Propagator of the scaled jets across the segment.
    phi: CMat,
    /// Particular solution at `x1` started from zero jets at `x0`.
    p: CMat,
}

pub(crate) struct Shooter<'a> {
    problem: &'a BoundaryContactProblem,
    lambda: C64,
    kappa: f64,
    source: Option<Source<'a>>,
    segments: Vec<Vec<Segment>>,
    offsets: Vec<usize>,
    unknowns: usize,
}

const CTL_RTOL: f64 = 1e-11;
const CTL_ATOL: f64 = 1e-13;

impl<'a> Shooter<'a> {
    pub(crate) fn new(
        problem: &'a BoundaryContactProblem,
        lambda: C64,
        source: Option<Source<'a>>,
    ) -> Result<Self> {
        let m = problem.order();
        let dim = problem.jet_dim();
        let kappa = jet_scale(lambda, m);
        let mut shooter = Shooter {
            problem,
            lambda,
            kappa,
            source,
            segments: Vec::new(),
            offsets: Vec::new(),
            unknowns: 0,
        };
        for e in 0..problem.graph.edges.len() {
            let len = problem.graph.edges[e].length;
            let g = growth_rate(problem, e, lambda, kappa);
            let n = ((len * g / 2.0).ceil() as usize).max(1);
            let mut segs = Vec::with_capacity(n);
            for j in 0..n {
                let x0 = len * j as f64 / n as f64;
                let x1 = len * (j + 1) as f64 / n as f64;
                let mut y = CMat::zeros(dim, dim + 1);
                y.view_mut((0, 0), (dim, dim)).fill_with_identity();
                shooter.advance(e, x0, x1, &mut y)?;
                segs.push(Segment {
                    x0,
                    x1,
                    phi: y.columns(0, dim).into_owned(),
                    p: y.columns(dim, 1).into_owned(),
                });
            }
            shooter.offsets.push(shooter.unknowns);
            shooter.unknowns += n * dim;
            shooter.segments.push(segs);
        }
        Ok(shooter)
    }

    /// Advances `y = [Phi | p]` from `x0` to `x1`; the source drives the last column.
    fn advance(&self, e: usize, x0: f64, x1: f64, y: &mut CMat) -> Result<()> {
        self.advance_with(e, x0, x1, y, y.ncols() == self.problem.jet_dim() + 1)
    }

    /// As [`Shooter::advance`]; with `forced_col` the last column is driven by the source.
    fn advance_with(
        &self,
        e: usize,
        x0: f64,
        x1: f64,
        y: &mut CMat,
        forced_col: bool,
    ) -> Result<()> {
        if x1 == x0 {
            return Ok(());
        }
        let op = &self.problem.operators[e];
        let r = op.rank;
        let dim = self.problem.jet_dim();
        let m = op.order;
        let kappa = self.kappa;
        let lambda = self.lambda;
        let forced = forced_col && self.source.is_some();
        if op.is_constant() && !forced {
            let k = scaled_companion(op, 0.0, lambda, kappa);
            let e = linalg::expm(&(k * C64::new(x1 - x0, 0.0)));
            *y = &e * &*y;
            return Ok(());
        }
        let last = y.ncols() - 1;
        let lead_inv = |x: f64| {
            linalg::inverse(&op.leading(x)).expect("leading coefficient checked invertible")
        };
        let scale = C64::new(kappa.powi(1 - m as i32), 0.0);
        let rhs = |x: f64, y: &CMat| {
            let k = scaled_companion(op, x, lambda, kappa);
            let mut out = k * y;
            if forced {
                let src = self.source.expect("source present")(e, x);
                let g = lead_inv(x) * src * scale;
                for i in 0..r {
                    out[((m - 1) * r + i, last)] += g[(i, 0)];
                }
            }
            out
        };
        let ctl = StepControl {
            rtol: CTL_RTOL,
            atol: CTL_ATOL,
            h_max: 1.0 / (1.0 + kappa),
        };
        let mut h = 0.0;
        debug_assert_eq!(y.nrows(), dim);
        ode::integrate(rhs, x0, x1, y, &mut h, &ctl, |_| {}).map_err(|u| Error::StiffEdge {
            edge: self.problem.graph.edges[e].id.clone(),
            x: u.0,
        })
    }

    /// Continuity and vertex rows `H z = b`, each row scaled to unit norm.
    pub(crate) fn system(&self) -> (CMat, CMat) {
        let p = self.problem;
        let dim = p.jet_dim();
        let r = p.rank();
        let m = p.order();
        let continuity: usize = self.segments.iter().map(|s| (s.len() - 1) * dim).sum();
        let nrows = continuity + p.total_rows();
        let mut h = CMat::zeros(nrows, self.unknowns);
        let mut b = CMat::zeros(nrows, 1);
        let mut row = 0;
        for (e, segs) in self.segments.iter().enumerate() {
            for j in 0..segs.len() - 1 {
                let c0 = self.offsets[e] + j * dim;
                for i in 0..dim {
                    h[(row + i, c0 + dim + i)] += C64::new(1.0, 0.0);
                    for c in 0..dim {
                        h[(row + i, c0 + c)] -= segs[j].phi[(i, c)];
                    }
                    b[(row + i, 0)] = segs[j].p[(i, 0)];
                }
                row += dim;
            }
        }
        let kpow: Vec<f64> = (0..m).map(|k| self.kappa.powi(k as i32)).collect();
        for (v, cc) in p.couplings.iter().enumerate() {
            for (pi, ep) in p.graph.vertices[v].endpoints.iter().enumerate() {
                let segs = &self.segments[ep.edge];
                for (k, block) in cc.blocks.iter().enumerate() {
                    for i in 0..cc.rows {
                        for f in 0..r {
                            let coef = block[(i, pi * r + f)] * kpow[k];
                            if coef == ZERO {
                                continue;
                            }
                            let jr = k * r + f;
                            match ep.side {
                                Side::Left => {
                                    h[(row + i, self.offsets[ep.edge] + jr)] += coef;
                                }
                                Side::Right => {
                                    let s = segs.last().expect("edge has a segment");
                                    let c0 = self.offsets[ep.edge] + (segs.len() - 1) * dim;
                                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                                    let coef = coef * sign;
                                    for c in 0..dim {
                                        h[(row + i, c0 + c)] += coef * s.phi[(jr, c)];
                                    }
                                    b[(row + i, 0)] -= coef * s.p[(jr, 0)];
                                }
                            }
                        }
                    }
                }
            }
            row += cc.rows;
        }
        for i in 0..nrows {
            let n = h.row(i).norm();
            if n > 0.0 {
                h.row_mut(i).unscale_mut(n);
                b.row_mut(i).unscale_mut(n);
            }
        }
        (h, b)
    }

    /// True jets `u^(k)` (rows `k * r + f`) at sorted points `xs` on edge `e`,
    /// for the solution whose segment-start jets are `z`.
    pub(crate) fn sample(&self, z: &CMat, e: usize, xs: &[f64]) -> Result<Vec<CMat>> {
        let dim = self.problem.jet_dim();
        let r = self.problem.rank();
        let segs = &self.segments[e];
        let forced = self.source.is_some();
        let mut out = Vec::with_capacity(xs.len());
        let mut seg = 0;
        let mut state = z.rows(self.offsets[e], dim).into_owned();
        let mut at = segs[0].x0;
        for &x in xs {
            while seg + 1 < segs.len() && x > segs[seg].x1 {
                seg += 1;
                state = z.rows(self.offsets[e] + seg * dim, dim).into_owned();
                at = segs[seg].x0;
            }
            self.advance_with(e, at, x, &mut state, forced)?;
            at = x;
            let mut jets = state.clone();
            for i in 0..dim {
                jets[(i, 0)] *= self.kappa.powi((i / r) as i32);
            }
            out.push(jets);
        }
        Ok(out)
    }

    /// Inward true jets of the solution at an edge end, `dim x 1`.
    pub(crate) fn end_jets(&self, z: &CMat, e: usize, side: Side) -> CMat {
        let dim = self.problem.jet_dim();
        let r = self.problem.rank();
        let segs = &self.segments[e];
        let mut y = match side {
            Side::Left => z.rows(self.offsets[e], dim).into_owned(),
            Side::Right => {
                let s = segs.last().expect("edge has a segment");
                let c0 = self.offsets[e] + (segs.len() - 1) * dim;
                &s.phi * z.rows(c0, dim) + &s.p
            }
        };
        for i in 0..dim {
            let k = i / r;
            let sign = if side == Side::Right && k % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            y[(i, 0)] *= sign * self.kappa.powi(k as i32);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use std::f64::consts::PI;

    #[test]
    fn sine_source_on_dirichlet_interval() {
        let p = builtins::interval_dirichlet();
        let src = |_: usize, x: f64| CMat::from_element(1, 1, C64::new(x.sin(), 0.0));
        let s = Shooter::new(&p, C64::new(-1.0, 0.0), Some(&src)).unwrap();
        let (h, b) = s.system();
        let z = linalg::solve(&h, &b).unwrap();
        let xs: Vec<f64> = (0..=10).map(|i| PI * i as f64 / 10.0).collect();
        let jets = s.sample(&z, 0, &xs).unwrap();
        for (x, j) in xs.iter().zip(&jets) {
            assert!((j[(0, 0)].re - x.sin() / 2.0).abs() < 1e-9);
            assert!((j[(1, 0)].re - x.cos() / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn null_vector_of_beam_at_an_eigenvalue() {
        let p = builtins::beam_clamped();
        let beta = builtins::clamped_beam_roots(3)[2];
        let s = Shooter::new(&p, C64::new(beta.powi(4), 0.0), None).unwrap();
        let (h, _) = s.system();
        let sv = linalg::singular_values(&h);
        assert!(sv.last().unwrap() / sv[0] < 1e-9);
    }

    #[test]
    fn segments_bound_growth_for_negative_lambda() {
        let p = builtins::interval_dirichlet();
        let s = Shooter::new(&p, C64::new(-1e4, 0.0), None).unwrap();
        assert!(s.segments[0].len() >= 150);
        let (h, _) = s.system();
        assert_eq!(h.nrows(), s.unknowns);
    }
}
