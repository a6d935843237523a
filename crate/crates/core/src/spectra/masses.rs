//! Orthonormal eigenfunctions and their distribution over the edges.

use crate::error::Result;
use crate::graph::BoundaryContactProblem;
use crate::numeric::linalg::{self, CMat, C64};
use crate::numeric::quad::gauss_legendre;

use super::shooting::Shooter;
use super::{jet_scale, secular_matrix, SolverOptions, MULTIPLICITY_THRESHOLD};

const NODES_PER_PANEL: usize = 10;

/// An `L^2`-orthonormal basis of one eigenspace, sampled at quadrature nodes.
#[derive(Debug, Clone)]
pub struct Eigenfunctions {
    pub lambda: f64,
    pub multiplicity: usize,
    /// Composite Gauss-Legendre nodes per edge.
    pub nodes: Vec<Vec<f64>>,
    /// Quadrature weights per edge, including the edge weight of the inner product.
    pub weights: Vec<Vec<f64>>,
    /// `values[j][e]` is `nodes[e].len() x r` for basis function `j`.
    pub values: Vec<Vec<CMat>>,
}

impl Eigenfunctions {
    /// `sum_j int_e w_e |psi_j|^2` for every edge.
    pub fn edge_masses(&self) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|e| {
                self.values
                    .iter()
                    .map(|psi| {
                        psi[e]
                            .row_iter()
                            .zip(&self.weights[e])
                            .map(|(row, w)| w * row.norm_squared())
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    /// `<g, psi_j>` for a function given by its values at the nodes of every edge.
    pub fn project(&self, g: &[CMat]) -> Vec<C64> {
        self.values
            .iter()
            .map(|psi| {
                let mut acc = C64::new(0.0, 0.0);
                for (e, ge) in g.iter().enumerate() {
                    for (i, w) in self.weights[e].iter().enumerate() {
                        for c in 0..ge.ncols() {
                            acc += ge[(i, c)] * psi[e][(i, c)].conj() * *w;
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

fn quadrature(len: f64, kappa: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = (len * (kappa + 1.0) / 2.0).ceil() as usize + 4;
    let (t, w) = gauss_legendre(NODES_PER_PANEL);
    let h = len / panels as f64;
    let mut xs = Vec::with_capacity(panels * NODES_PER_PANEL);
    let mut ws = Vec::with_capacity(panels * NODES_PER_PANEL);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (ti, wi) in t.iter().zip(&w) {
            xs.push(mid + 0.5 * h * ti);
            ws.push(0.5 * h * wi);
        }
    }
    (xs, ws)
}

/// Orthonormal eigenfunctions at `lambda`; empty when `lambda` is not an eigenvalue.
pub fn eigenfunctions(problem: &BoundaryContactProblem, lambda: f64) -> Result<Eigenfunctions> {
    problem.ensure_valid()?;
    let z = C64::new(lambda, 0.0);
    let q = secular_matrix(problem, z, &SolverOptions::default())?.nullity(MULTIPLICITY_THRESHOLD);
    let r = problem.rank();
    let kappa = jet_scale(z, problem.order());
    let ne = problem.graph.edges.len();
    let (nodes, weights): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (0..ne)
        .map(|e| {
            let (x, w) = quadrature(problem.graph.edges[e].length, kappa);
            let we = problem.graph.edge_weight(e);
            (x, w.into_iter().map(|v| v * we).collect())
        })
        .unzip();
    if q == 0 {
        return Ok(Eigenfunctions {
            lambda,
            multiplicity: 0,
            nodes,
            weights,
            values: Vec::new(),
        });
    }

    let shooter = Shooter::new(problem, z, None)?;
    let (h, _) = shooter.system();
    let null = linalg::smallest_right_singular_vectors(&h, q);
    let mut raw: Vec<Vec<CMat>> = Vec::with_capacity(q);
    for j in 0..q {
        let col = null.columns(j, 1).into_owned();
        let mut per_edge = Vec::with_capacity(ne);
        for e in 0..ne {
            let jets = shooter.sample(&col, e, &nodes[e])?;
            let mut vals = CMat::zeros(nodes[e].len(), r);
            for (i, jet) in jets.iter().enumerate() {
                for c in 0..r {
                    vals[(i, c)] = jet[(c, 0)];
                }
            }
            per_edge.push(vals);
        }
        raw.push(per_edge);
    }

    let mut gram = CMat::zeros(q, q);
    for a in 0..q {
        for b in 0..q {
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..ne {
                for (i, w) in weights[e].iter().enumerate() {
                    for c in 0..r {
                        acc += raw[a][e][(i, c)].conj() * raw[b][e][(i, c)] * *w;
                    }
                }
            }
            gram[(a, b)] = acc;
        }
    }
    let chol = gram
        .clone()
        .cholesky()
        .expect("Gram matrix of independent functions is positive definite");
    // psi = raw * L^{-*} has identity Gram.
    let l_inv_adj = linalg::inverse(&chol.l())
        .expect("Cholesky factor is invertible")
        .adjoint();
    let values = (0..q)
        .map(|j| {
            (0..ne)
                .map(|e| {
                    let mut v = CMat::zeros(nodes[e].len(), r);
                    for a in 0..q {
                        v += &raw[a][e] * l_inv_adj[(a, j)];
                    }
                    v
                })
                .collect()
        })
        .collect();
    Ok(Eigenfunctions {
        lambda,
        multiplicity: q,
        nodes,
        weights,
        values,
    })
}

/// Per-edge masses of the eigenspace at `lambda`; they sum to its multiplicity.
pub fn eigenfunction_edge_masses(
    problem: &BoundaryContactProblem,
    lambda: f64,
) -> Result<Vec<f64>> {
    Ok(eigenfunctions(problem, lambda)?.edge_masses())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use std::f64::consts::PI;

    #[test]
    fn single_edge_carries_everything() {
        let p = builtins::interval_dirichlet();
        for k in 1..=6 {
            let m = eigenfunction_edge_masses(&p, (k * k) as f64).unwrap();
            assert!((m[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_star_mode_is_spread_evenly() {
        let p = builtins::star3_kirchhoff();
        let m = eigenfunction_edge_masses(&p, (PI / 2.0).powi(2)).unwrap();
        for v in m {
            assert!((v - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn circle_double_eigenvalue() {
        let p = builtins::circle_glued();
        let m = eigenfunction_edge_masses(&p, PI * PI).unwrap();
        assert!((m.iter().sum::<f64>() - 2.0).abs() < 1e-6);
        assert!(m.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn split_interval_halves() {
        let p = builtins::split_interval_dirichlet();
        for k in [1.0f64, 2.0, 7.0, 40.0] {
            let m = eigenfunction_edge_masses(&p, k * k).unwrap();
            assert!(
                (m[0] - 0.5).abs() < 1e-10 && (m[1] - 0.5).abs() < 1e-10,
                "{m:?}"
            );
        }
    }

    #[test]
    fn eigenfunctions_are_sines() {
        let p = builtins::interval_dirichlet();
        let ef = eigenfunctions(&p, 9.0).unwrap();
        assert_eq!(ef.multiplicity, 1);
        let psi = &ef.values[0][0];
        // Up to a unit phase, psi = sqrt(2/pi) sin 3x.
        let phase = psi[(5, 0)] / (ef.nodes[0][5] * 3.0).sin();
        for (i, x) in ef.nodes[0].iter().enumerate() {
            let want = phase * (3.0 * x).sin();
            assert!((psi[(i, 0)] - want).norm() < 1e-9);
        }
        assert!((phase.norm() - (2.0 / PI).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn off_spectrum_is_empty() {
        let ef = eigenfunctions(&builtins::interval_dirichlet(), 2.5).unwrap();
        assert_eq!(ef.multiplicity, 0);
        assert_eq!(ef.edge_masses(), vec![0.0]);
    }
}
