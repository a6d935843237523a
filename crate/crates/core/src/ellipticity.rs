//! Parameter-ellipticity of a boundary contact problem in its sector.
//!
//! The interior test looks at the principal symbol `a_m(x) (i xi)^m` for
//! `xi = +-1`. The boundary test freezes the leading coefficient at every edge
//! end of a vertex, collects the decaying solutions of `a_m u^(m) = lambda u` on
//! the half-line, applies the vertex rows to their jets, and asks that the
//! resulting Lopatinsky matrix be invertible along the unit arc of the sector.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BoundaryContactProblem, Side, LEADING_SAMPLES};
use crate::numeric::linalg::{self, CMat, C64, ONE, ZERO};

/// Relative tolerance for merging characteristic roots into one cluster.
pub const CLUSTER_TOL: f64 = 1e-7;
pub const DEFAULT_ARC_SAMPLES: usize = 64;
pub const DEFAULT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct InteriorWitness {
    pub edge: String,
    pub x: f64,
    pub xi: f64,
    pub eigenvalue: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct InteriorReport {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<InteriorWitness>,
}

/// Characteristic roots split by the sign of their real part, with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSplit {
    pub stable: Vec<(C64, usize)>,
    pub unstable: Vec<(C64, usize)>,
    pub neutral: Vec<(C64, usize)>,
}

impl ExponentSplit {
    /// Number of decaying solutions counted with multiplicity (per fiber, i.e. already times `r`).
    pub fn stable_count(&self) -> usize {
        self.stable.iter().map(|(_, q)| q).sum()
    }

    /// All roots with multiplicity, stable first.
    pub fn all_roots(&self) -> Vec<C64> {
        self.stable
            .iter()
            .chain(&self.unstable)
            .chain(&self.neutral)
            .flat_map(|&(mu, q)| std::iter::repeat_n(mu, q))
            .collect()
    }
}

/// Roots of `det(sum_k symbol[k] mu^k - lambda I) = 0`, clustered and split.
///
/// `symbol[k]` is the `r x r` coefficient of `mu^k`; the last one must be invertible.
pub fn exponents_of_symbol(symbol: &[CMat], lambda: C64, interior: bool) -> Result<ExponentSplit> {
    let roots = linalg::eigenvalues(&companion(symbol, lambda)?);
    split(&roots, lambda, interior)
}

/// Characteristic exponents of the frozen principal part `a_m mu^m - lambda`.
pub fn characteristic_exponents(
    leading: &CMat,
    m: usize,
    lambda: C64,
    interior: bool,
) -> Result<ExponentSplit> {
    exponents_of_symbol(&symbol_of_order(leading, m), lambda, interior)
}

/// `[0, .., 0, a_m]` with `m + 1` entries.
pub fn symbol_of_order(leading: &CMat, m: usize) -> Vec<CMat> {
    let r = leading.nrows();
    let mut s = vec![CMat::zeros(r, r); m + 1];
    s[m] = leading.clone();
    s
}

/// Block companion matrix of `sum_k symbol[k] mu^k - lambda I`, acting on `(v, mu v, ..)`.
pub fn companion(symbol: &[CMat], lambda: C64) -> Result<CMat> {
    let m = symbol.len() - 1;
    let r = symbol[m].nrows();
    let inv = linalg::inverse(&symbol[m]).ok_or_else(|| Error::DegenerateLeading {
        edge: "<symbol>".into(),
        x: 0.0,
    })?;
    let mut k = CMat::zeros(m * r, m * r);
    for b in 0..m.saturating_sub(1) {
        for i in 0..r {
            k[(b * r + i, (b + 1) * r + i)] = ONE;
        }
    }
    for (b, s) in symbol.iter().take(m).enumerate() {
        let mut sb = s.clone();
        if b == 0 {
            for i in 0..r {
                sb[(i, i)] -= lambda;
            }
        }
        let blk = -(&inv * sb);
        k.view_mut(((m - 1) * r, b * r), (r, r)).copy_from(&blk);
    }
    Ok(k)
}

fn cluster(roots: &[C64]) -> Vec<(C64, usize)> {
    let scale = roots
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = CLUSTER_TOL * scale;
    let mut groups: Vec<(C64, Vec<C64>)> = Vec::new();
    for &z in roots {
        match groups.iter_mut().find(|(c, _)| (*c - z).norm() <= tol) {
            Some((c, members)) => {
                members.push(z);
                *c = members.iter().sum::<C64>() / members.len() as f64;
            }
            None => groups.push((z, vec![z])),
        }
    }
    let mut out: Vec<(C64, usize)> = groups.into_iter().map(|(c, v)| (c, v.len())).collect();
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

fn split(roots: &[C64], lambda: C64, interior: bool) -> Result<ExponentSplit> {
    let scale = roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = CLUSTER_TOL * scale;
    let mut s = ExponentSplit {
        stable: vec![],
        unstable: vec![],
        neutral: vec![],
    };
    for (mu, q) in cluster(roots) {
        if mu.re.abs() <= tol {
            if interior {
                return Err(Error::NeutralExponent(lambda));
            }
            s.neutral.push((mu, q));
        } else if mu.re < 0.0 {
            s.stable.push((mu, q));
        } else {
            s.unstable.push((mu, q));
        }
    }
    Ok(s)
}

/// Inward jets `(u, u', .., u^(m-1))` at `x = 0` of a basis of the decaying
/// solutions, as an `(m r) x m_minus` matrix with row blocks indexed by jet order.
pub fn stable_jets(symbol: &[CMat], lambda: C64, split: &ExponentSplit) -> Result<CMat> {
    let m = symbol.len() - 1;
    let r = symbol[m].nrows();
    let n = split.stable_count();
    let mut out = CMat::zeros(m * r, n);
    let mut col = 0;
    if r == 1 {
        // x^p e^{mu x}: d^k/dx^k at 0 equals k!/(k-p)! mu^(k-p) for k >= p.
        for &(mu, q) in &split.stable {
            for p in 0..q {
                for k in p..m {
                    let falling: f64 = ((k - p + 1)..=k).map(|i| i as f64).product();
                    out[(k, col)] = mu.powu((k - p) as u32) * falling;
                }
                col += 1;
            }
        }
        return Ok(out);
    }
    let kmat = companion(symbol, lambda)?;
    let dim = m * r;
    for &(mu, q) in &split.stable {
        let shifted = &kmat - CMat::identity(dim, dim) * mu;
        let mut power = CMat::identity(dim, dim);
        for _ in 0..q {
            power = &power * &shifted;
        }
        let null = linalg::smallest_right_singular_vectors(&power, q);
        out.columns_mut(col, q).copy_from(&null);
        col += q;
    }
    Ok(out)
}

/// Lopatinsky matrix of a vertex at `lambda`, with per-channel stable counts.
#[derive(Debug, Clone)]
pub struct LopatinskyMatrix {
    pub matrix: CMat,
    pub stable_counts: Vec<usize>,
    /// Set when no square matrix exists: row/column mismatch or a neutral root.
    pub structural: Option<String>,
}

impl LopatinskyMatrix {
    pub fn is_square(&self) -> bool {
        self.matrix.nrows() == self.matrix.ncols()
    }

    /// `sigma_min / sigma_max`, zero for structural failures.
    pub fn normalized_sigma(&self) -> f64 {
        if self.structural.is_some() || !self.is_square() || self.matrix.nrows() == 0 {
            return 0.0;
        }
        let sv = linalg::singular_values(&self.matrix);
        let max = sv[0];
        if max == 0.0 {
            0.0
        } else {
            sv[sv.len() - 1] / max
        }
    }
}

fn endpoint_position(problem: &BoundaryContactProblem, edge: usize, side: Side) -> f64 {
    match side {
        Side::Left => 0.0,
        Side::Right => problem.graph.edges[edge].length,
    }
}

pub fn lopatinsky_matrix(
    problem: &BoundaryContactProblem,
    vertex: usize,
    lambda: C64,
) -> Result<LopatinskyMatrix> {
    let m = problem.order();
    let r = problem.rank();
    let vert = &problem.graph.vertices[vertex];
    let cc = &problem.couplings[vertex];
    let interior = problem.sector.contains_interior(lambda);
    let mut channels = Vec::new();
    let mut structural = None;
    for p in &vert.endpoints {
        let x = endpoint_position(problem, p.edge, p.side);
        let lead = problem.operators[p.edge].leading(x);
        let symbol = symbol_of_order(&lead, m);
        let split = exponents_of_symbol(&symbol, lambda, interior)?;
        if !split.neutral.is_empty() && structural.is_none() {
            structural = Some(format!("neutral exponent at lambda = {lambda}"));
        }
        channels.push(stable_jets(&symbol, lambda, &split)?);
    }
    let stable_counts: Vec<usize> = channels.iter().map(|c| c.ncols()).collect();
    let ncols: usize = stable_counts.iter().sum();
    let mut mat = CMat::zeros(cc.rows, ncols);
    let mut col = 0;
    for (j, jets) in channels.iter().enumerate() {
        for c in 0..jets.ncols() {
            for (k, block) in cc.blocks.iter().enumerate() {
                for row in 0..cc.rows {
                    let mut acc = ZERO;
                    for f in 0..r {
                        acc += block[(row, j * r + f)] * jets[(k * r + f, c)];
                    }
                    mat[(row, col)] += acc;
                }
            }
            col += 1;
        }
    }
    if structural.is_none() && cc.rows != ncols {
        structural = Some(format!(
            "rectangular Lopatinsky matrix: {} rows against {ncols} decaying solutions",
            cc.rows
        ));
    }
    Ok(LopatinskyMatrix {
        matrix: mat,
        stable_counts,
        structural,
    })
}

pub fn interior_check(
    problem: &BoundaryContactProblem,
    n_x_samples: usize,
) -> Result<InteriorReport> {
    let m = problem.order();
    // (i xi)^m for xi = +-1 and even m.
    let sign = if (m / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let r = problem.rank();
    for (op, edge) in problem.operators.iter().zip(&problem.graph.edges) {
        for i in 0..n_x_samples + 2 {
            let x = edge.length * i as f64 / (n_x_samples + 1) as f64;
            let lead = op.leading(x);
            if linalg::rank(&lead, 1e-12) < r {
                return Err(Error::DegenerateLeading {
                    edge: edge.id.clone(),
                    x,
                });
            }
            for xi in [1.0, -1.0] {
                let factor = sign * f64::powi(xi, m as i32);
                for ev in linalg::eigenvalues(&(&lead * C64::new(factor, 0.0))) {
                    if problem.sector.contains(ev) {
                        return Ok(InteriorReport {
                            ok: false,
                            witness: Some(InteriorWitness {
                                edge: edge.id.clone(),
                                x,
                                xi,
                                eigenvalue: [ev.re, ev.im],
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(InteriorReport {
        ok: true,
        witness: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexReport {
    pub id: String,
    pub min_sigma: f64,
    pub argmin_lambda: [f64; 2],
    /// Total decaying solutions per arc sample, in arc order.
    pub stable_counts: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

pub fn vertex_check(
    problem: &BoundaryContactProblem,
    vertex: usize,
    n_samples: usize,
) -> Result<VertexReport> {
    let arc = problem.sector.arc(n_samples);
    let samples: Vec<(f64, usize, Option<String>)> = arc
        .par_iter()
        .map(|&lambda| {
            let lm = lopatinsky_matrix(problem, vertex, lambda)?;
            Ok((
                lm.normalized_sigma(),
                lm.stable_counts.iter().sum(),
                lm.structural,
            ))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, s) in samples.iter().enumerate() {
        if s.0 < samples[best].0 {
            best = i;
        }
    }
    let witness = samples.iter().find_map(|s| s.2.clone());
    Ok(VertexReport {
        id: problem.graph.vertices[vertex].id.clone(),
        min_sigma: samples[best].0,
        argmin_lambda: [arc[best].re, arc[best].im],
        stable_counts: samples.iter().map(|s| s.1).collect(),
        witness,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Sampling {
    pub n: usize,
    pub threshold: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            n: DEFAULT_ARC_SAMPLES,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityVerdict {
    pub interior: InteriorReport,
    pub vertices: Vec<VertexReport>,
    pub elliptic: bool,
    pub sampling: Sampling,
}

impl EllipticityVerdict {
    pub fn min_sigma(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.min_sigma)
            .fold(1.0, f64::min)
    }
}

pub fn check(problem: &BoundaryContactProblem, sampling: Sampling) -> Result<EllipticityVerdict> {
    problem.ensure_valid()?;
    let interior = interior_check(problem, LEADING_SAMPLES)?;
    let vertices = if interior.ok {
        (0..problem.graph.vertices.len())
            .map(|v| vertex_check(problem, v, sampling.n))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let elliptic = interior.ok
        && vertices
            .iter()
            .all(|v| v.witness.is_none() && v.min_sigma > sampling.threshold);
    Ok(EllipticityVerdict {
        interior,
        vertices,
        elliptic,
        sampling,
    })
}

/// Frozen-symbol test at one point of a base of arbitrary dimension.
///
/// `symbol[k]` is the coefficient of `mu^k` in the principal symbol with the
/// tangential covariable already substituted; `blocks[k]` multiplies the `k`-th
/// jet of the decaying solutions. Returns `sigma_min / sigma_max`, or zero when
/// the matrix is not square.
pub fn point_check(symbol: &[CMat], blocks: &[CMat], lambda: C64) -> Result<f64> {
    let m = symbol.len() - 1;
    let r = symbol[m].nrows();
    let split = exponents_of_symbol(symbol, lambda, false)?;
    if !split.neutral.is_empty() {
        return Ok(0.0);
    }
    let jets = stable_jets(symbol, lambda, &split)?;
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let mut mat = CMat::zeros(rows, jets.ncols());
    for (k, b) in blocks.iter().enumerate().take(m) {
        mat += b * jets.rows(k * r, r);
    }
    Ok(LopatinskyMatrix {
        matrix: mat,
        stable_counts: vec![jets.ncols()],
        structural: None,
    }
    .normalized_sigma())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::graph::{CouplingCondition, EdgeOperator, MatPoly, Sector};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, c(v, 0.0))
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn laplacian_is_interior_elliptic_in_left_half_plane() {
        let p = builtins::interval_dirichlet();
        assert!(interior_check(&p, 8).unwrap().ok);
    }

    #[test]
    fn laplacian_fails_in_sector_around_positive_axis() {
        let mut p = builtins::interval_dirichlet();
        p.sector = Sector::new(0.0, 0.1).unwrap();
        let rep = interior_check(&p, 8).unwrap();
        assert!(!rep.ok);
        let w = rep.witness.unwrap();
        assert!((w.eigenvalue[0] - 1.0).abs() < 1e-15 && w.eigenvalue[1].abs() < 1e-15);
    }

    #[test]
    fn rank_two_symbol_rays_avoid_narrow_left_sector() {
        let mut p = builtins::interval_dirichlet();
        let lead = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(-1.0, 0.0),
            -C64::from_polar(1.0, PI / 4.0),
        ]));
        p.operators = vec![EdgeOperator {
            order: 2,
            rank: 2,
            coeffs: vec![MatPoly::zero(2), MatPoly::zero(2), MatPoly::constant(lead)],
        }];
        p.couplings = vec![
            CouplingCondition {
                rows: 2,
                blocks: vec![CMat::identity(2, 2), CMat::zeros(2, 2)],
            };
            2
        ];
        p.sector = Sector::new(PI, PI / 4.0).unwrap();
        assert!(p.validate().is_ok());
        assert!(interior_check(&p, 8).unwrap().ok);
    }

    #[test]
    fn degenerate_leading_is_an_error() {
        let mut p = builtins::interval_dirichlet();
        p.operators[0].coeffs[2] = MatPoly {
            coeffs: vec![scalar(0.0), scalar(1.0)],
        };
        assert!(matches!(
            interior_check(&p, 8),
            Err(Error::DegenerateLeading { .. })
        ));
    }

    #[test]
    fn exponents_of_second_order_operator() {
        let s = characteristic_exponents(&scalar(-1.0), 2, c(-1.0, 0.0), true).unwrap();
        assert_eq!(s.stable_count(), 1);
        assert!((s.stable[0].0 - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((s.unstable[0].0 - c(1.0, 0.0)).norm() < 1e-14);

        let s = characteristic_exponents(&scalar(-1.0), 2, c(0.0, 1.0), false).unwrap();
        let expect = -C64::from_polar(1.0, -PI / 4.0);
        assert!((s.stable[0].0 - expect).norm() < 1e-14);
        assert!((s.stable[0].0.re + FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn exponents_of_fourth_order_operator() {
        let s = exponents_of_symbol(&symbol_of_order(&scalar(1.0), 4), c(-1.0, 0.0), true).unwrap();
        assert_eq!(s.stable_count(), 2);
        let want = sorted(vec![
            C64::from_polar(1.0, 3.0 * PI / 4.0),
            C64::from_polar(1.0, 5.0 * PI / 4.0),
        ]);
        let got = sorted(s.stable.iter().map(|x| x.0).collect());
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn neutral_exponent_in_the_interior_is_an_error() {
        // -u'' with lambda = 1: mu^2 = -1 gives purely imaginary roots.
        let err = characteristic_exponents(&scalar(-1.0), 2, c(1.0, 0.0), true).unwrap_err();
        assert!(err.to_string().contains("neutral exponent"));
    }

    #[test]
    fn kirchhoff_lopatinsky_matrix_closed_form() {
        let p = builtins::star3_kirchhoff();
        let lm = lopatinsky_matrix(&p, 0, c(-1.0, 0.0)).unwrap();
        let want = CMat::from_row_slice(
            3,
            3,
            &[
                c(1., 0.),
                c(-1., 0.),
                c(0., 0.),
                c(0., 0.),
                c(1., 0.),
                c(-1., 0.),
                c(-1., 0.),
                c(-1., 0.),
                c(-1., 0.),
            ],
        );
        assert!((&lm.matrix - &want).norm() < 1e-14);
        assert!((lm.matrix.determinant().norm() - 3.0).abs() < 1e-12);
        for lambda in p.sector.arc(9) {
            let lm = lopatinsky_matrix(&p, 0, lambda).unwrap();
            let mu = -(-lambda).sqrt();
            assert!((lm.matrix.determinant().norm() - 3.0 * mu.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_vertex_is_identity() {
        let p = builtins::interval_dirichlet();
        let lm = lopatinsky_matrix(&p, 0, c(-1.0, 0.0)).unwrap();
        assert_eq!(lm.matrix, CMat::identity(1, 1));
        let rep = vertex_check(&p, 0, 16).unwrap();
        assert_eq!(rep.min_sigma, 1.0);
    }

    #[test]
    fn transmission_rows_are_singular_everywhere() {
        let p = builtins::transmission_bad();
        let mid = p
            .graph
            .vertices
            .iter()
            .position(|v| v.degree() == 2)
            .unwrap();
        let lm = lopatinsky_matrix(&p, mid, c(-4.0, 0.0)).unwrap();
        assert!(lm.matrix.determinant().norm() < 1e-14);
        let rep = vertex_check(&p, mid, 64).unwrap();
        assert!(rep.min_sigma < 1e-12);
        let v = check(&p, Sampling::default()).unwrap();
        assert!(!v.elliptic);
    }

    #[test]
    fn kirchhoff_star_arc_minimum() {
        let p = builtins::star3_kirchhoff();
        let rep = vertex_check(&p, 0, 64).unwrap();
        let oracle = p
            .sector
            .arc(64)
            .into_iter()
            .map(|lambda| {
                let mu = -(-lambda).sqrt();
                let m = CMat::from_row_slice(3, 3, &[ONE, -ONE, ZERO, ZERO, ONE, -ONE, mu, mu, mu]);
                let sv = m.singular_values();
                sv.min() / sv.max()
            })
            .fold(1.0, f64::min);
        assert!(rep.min_sigma > 0.3);
        assert!((rep.min_sigma - oracle).abs() < 1e-12);
        assert!(rep.stable_counts.iter().all(|&n| n == 3));
    }

    #[test]
    fn delta_coupling_matches_kirchhoff_verdict() {
        let k = check(&builtins::star3_kirchhoff(), Sampling::default()).unwrap();
        let d = check(&builtins::star3_delta(), Sampling::default()).unwrap();
        assert!(k.elliptic && d.elliptic);
    }

    #[test]
    fn short_star_is_structurally_non_elliptic() {
        let mut p = builtins::star3_kirchhoff();
        let cc = p.couplings[0].clone();
        p.couplings[0] = CouplingCondition {
            rows: 2,
            blocks: cc
                .blocks
                .iter()
                .map(|b| b.rows(0, 2).into_owned())
                .collect(),
        };
        let v = check(&p, Sampling::default()).unwrap();
        assert!(!v.elliptic);
        assert!(v.vertices[0]
            .witness
            .as_deref()
            .unwrap()
            .contains("rectangular"));
        assert_eq!(v.vertices[0].min_sigma, 0.0);
    }

    #[test]
    fn clamped_beam_has_two_decaying_solutions() {
        let p = builtins::beam_clamped();
        let v = check(&p, Sampling::default()).unwrap();
        assert!(v.elliptic, "{v:?}");
        assert!(v
            .vertices
            .iter()
            .all(|r| r.stable_counts.iter().all(|&n| n == 2)));
    }

    #[test]
    fn rank_two_jets_come_from_invariant_subspace() {
        // Two decoupled copies of -u'' with Dirichlet rows: identity-like, well conditioned.
        let lead = CMat::identity(2, 2) * c(-1.0, 0.0);
        let symbol = symbol_of_order(&lead, 2);
        let lambda = c(-4.0, 0.0);
        let split = exponents_of_symbol(&symbol, lambda, true).unwrap();
        assert_eq!(split.stable.len(), 1);
        assert_eq!(split.stable[0].1, 2);
        assert!((split.stable[0].0 - c(-2.0, 0.0)).norm() < 1e-13);
        let jets = stable_jets(&symbol, lambda, &split).unwrap();
        // Second jet block equals mu times the first for every column.
        let diff = jets.rows(2, 2) - jets.rows(0, 2) * c(-2.0, 0.0);
        assert!(diff.norm() < 1e-12);
        let blocks = vec![CMat::identity(2, 2), CMat::zeros(2, 2)];
        assert!((point_check(&symbol, &blocks, lambda).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_check_with_tangential_covariable() {
        // Frozen Laplacian -(d_x^2) + eta^2 on a half-space, Dirichlet: decaying root -sqrt(eta^2 - lambda).
        let eta: f64 = 0.7;
        let symbol = vec![scalar(eta * eta), scalar(0.0), scalar(-1.0)];
        let blocks = vec![scalar(1.0), scalar(0.0)];
        assert!((point_check(&symbol, &blocks, c(-1.0, 0.0)).unwrap() - 1.0).abs() < 1e-14);
        // Transmission-type Neumann row u' = 0 is still a 1x1 nonzero matrix.
        let blocks = vec![scalar(0.0), scalar(1.0)];
        assert!(point_check(&symbol, &blocks, c(-1.0, 0.5)).unwrap() > 0.0);
    }
}
