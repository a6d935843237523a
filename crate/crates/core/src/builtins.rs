//! Builtin example problems with closed-form reference data.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    BoundaryContactProblem, CouplingCondition, Edge, EdgeOperator, Endpoint, MetricGraph, Sector,
    Side, Vertex,
};

/// Strength of the delta coupling in `star3-delta`.
pub const DELTA_STRENGTH: f64 = 1.0;

pub const NAMES: [&str; 7] = [
    "interval-dirichlet",
    "interval-neumann",
    "star3-kirchhoff",
    "star3-delta",
    "circle-glued",
    "transmission-bad",
    "beam-clamped",
];

fn left_sector() -> Sector {
    Sector::from_degrees(180.0, 90.0).expect("valid sector")
}

fn ep(edge: usize, side: Side) -> Endpoint {
    Endpoint {
        edge,
        side,
        weight: 1.0,
    }
}

fn vertex(id: &str, endpoints: Vec<Endpoint>) -> Vertex {
    Vertex {
        id: id.into(),
        endpoints,
    }
}

fn edges(lengths: &[f64]) -> Vec<Edge> {
    lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| Edge {
            id: format!("e{i}"),
            length: l,
        })
        .collect()
}

fn dirichlet() -> CouplingCondition {
    CouplingCondition::from_real_blocks(1, 1, &[&[1.0], &[0.0]])
}

fn neumann() -> CouplingCondition {
    CouplingCondition::from_real_blocks(1, 1, &[&[0.0], &[1.0]])
}

/// Continuity plus vanishing sum of inward derivatives at a degree-`d` vertex,
/// with an optional `-alpha * u_1` term in the derivative row.
pub fn kirchhoff(d: usize, alpha: f64) -> CouplingCondition {
    let mut m0 = vec![0.0; d * d];
    let mut m1 = vec![0.0; d * d];
    for i in 0..d - 1 {
        m0[i * d + i] = 1.0;
        m0[i * d + i + 1] = -1.0;
    }
    for j in 0..d {
        m1[(d - 1) * d + j] = 1.0;
    }
    m0[(d - 1) * d] = -alpha;
    CouplingCondition::from_real_blocks(d, d, &[&m0, &m1])
}

fn laplacian_problem(
    lengths: &[f64],
    vertices: Vec<Vertex>,
    couplings: Vec<CouplingCondition>,
) -> BoundaryContactProblem {
    BoundaryContactProblem {
        graph: MetricGraph {
            edges: edges(lengths),
            vertices,
        },
        operators: lengths.iter().map(|_| EdgeOperator::laplacian()).collect(),
        couplings,
        sector: left_sector(),
    }
}

/// `-u''` on `[0, pi]` with `u(0) = u(pi) = 0`.
pub fn interval_dirichlet() -> BoundaryContactProblem {
    laplacian_problem(
        &[PI],
        vec![
            vertex("v0", vec![ep(0, Side::Left)]),
            vertex("v1", vec![ep(0, Side::Right)]),
        ],
        vec![dirichlet(), dirichlet()],
    )
}

/// `-u''` on `[0, pi]` with vanishing derivatives at both ends.
pub fn interval_neumann() -> BoundaryContactProblem {
    laplacian_problem(
        &[PI],
        vec![
            vertex("v0", vec![ep(0, Side::Left)]),
            vertex("v1", vec![ep(0, Side::Right)]),
        ],
        vec![neumann(), neumann()],
    )
}

fn star3(alpha: f64) -> BoundaryContactProblem {
    laplacian_problem(
        &[1.0, 1.0, 1.0],
        vec![
            vertex(
                "c",
                vec![ep(0, Side::Left), ep(1, Side::Left), ep(2, Side::Left)],
            ),
            vertex("l0", vec![ep(0, Side::Right)]),
            vertex("l1", vec![ep(1, Side::Right)]),
            vertex("l2", vec![ep(2, Side::Right)]),
        ],
        vec![kirchhoff(3, alpha), dirichlet(), dirichlet(), dirichlet()],
    )
}

/// Equilateral star with three unit edges, Kirchhoff center, Dirichlet leaves.
pub fn star3_kirchhoff() -> BoundaryContactProblem {
    star3(0.0)
}

/// As [`star3_kirchhoff`] with a delta coupling of strength [`DELTA_STRENGTH`].
pub fn star3_delta() -> BoundaryContactProblem {
    star3(DELTA_STRENGTH)
}

/// Two unit intervals glued along both pairs of ends: a circle of length 2.
pub fn circle_glued() -> BoundaryContactProblem {
    laplacian_problem(
        &[1.0, 1.0],
        vec![
            vertex("a", vec![ep(0, Side::Left), ep(1, Side::Left)]),
            vertex("b", vec![ep(0, Side::Right), ep(1, Side::Right)]),
        ],
        vec![kirchhoff(2, 0.0), kirchhoff(2, 0.0)],
    )
}

/// Two unit edges joined by `u1 = u2`, `u1' = u2'` in inward jets: not elliptic.
pub fn transmission_bad() -> BoundaryContactProblem {
    laplacian_problem(
        &[1.0, 1.0],
        vec![
            vertex("l", vec![ep(0, Side::Left)]),
            vertex("m", vec![ep(0, Side::Right), ep(1, Side::Left)]),
            vertex("r", vec![ep(1, Side::Right)]),
        ],
        vec![
            dirichlet(),
            CouplingCondition::from_real_blocks(
                2,
                2,
                &[&[1.0, -1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, -1.0]],
            ),
            dirichlet(),
        ],
    )
}

/// `u''''` on `[0, 1]` with `u = u' = 0` at both ends.
pub fn beam_clamped() -> BoundaryContactProblem {
    let clamp = || {
        CouplingCondition::from_real_blocks(
            2,
            1,
            &[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]],
        )
    };
    BoundaryContactProblem {
        graph: MetricGraph {
            edges: edges(&[1.0]),
            vertices: vec![
                vertex("v0", vec![ep(0, Side::Left)]),
                vertex("v1", vec![ep(0, Side::Right)]),
            ],
        },
        operators: vec![EdgeOperator::scalar_constant(&[0.0, 0.0, 0.0, 0.0, 1.0])],
        couplings: vec![clamp(), clamp()],
        sector: left_sector(),
    }
}

/// The Dirichlet interval `[0, pi]` cut at `pi/2` into two edges joined by Kirchhoff
/// conditions; per-edge multipliers then localize to either half.
pub fn split_interval_dirichlet() -> BoundaryContactProblem {
    laplacian_problem(
        &[PI / 2.0, PI / 2.0],
        vec![
            vertex("v0", vec![ep(0, Side::Left)]),
            vertex("mid", vec![ep(0, Side::Right), ep(1, Side::Left)]),
            vertex("v1", vec![ep(1, Side::Right)]),
        ],
        vec![dirichlet(), kirchhoff(2, 0.0), dirichlet()],
    )
}

pub fn by_name(name: &str) -> Result<BoundaryContactProblem> {
    Ok(match name {
        "interval-dirichlet" => interval_dirichlet(),
        "interval-neumann" => interval_neumann(),
        "star3-kirchhoff" => star3_kirchhoff(),
        "star3-delta" => star3_delta(),
        "circle-glued" => circle_glued(),
        "transmission-bad" => transmission_bad(),
        "beam-clamped" => beam_clamped(),
        other => return Err(Error::UnknownExample(other.into())),
    })
}

pub fn all() -> Vec<(&'static str, BoundaryContactProblem)> {
    NAMES
        .iter()
        .map(|&n| (n, by_name(n).expect("builtin")))
        .collect()
}

/// Reference data shipped next to each builtin.
#[derive(Debug, Clone, Serialize)]
pub struct Oracle {
    pub name: String,
    pub description: String,
    pub elliptic: bool,
    pub symmetric: bool,
    pub positive: bool,
    pub total_length: f64,
    /// Leading eigenvalues with multiplicities from closed forms.
    pub eigenvalues: Vec<(f64, usize)>,
    pub alpha0: Option<f64>,
    pub alpha1: Option<f64>,
    pub weyl_constant: Option<f64>,
}

/// Leading `count` roots of `cos(b) cosh(b) = 1`, `b > 0`, by bisection.
pub fn clamped_beam_roots(count: usize) -> Vec<f64> {
    let f = |b: f64| b.cos() * b.cosh() - 1.0;
    let mut out = Vec::new();
    let mut n = 1;
    while out.len() < count {
        // One root in each ((n + 1/2) pi - 1, (n + 1/2) pi + 1).
        let c = (n as f64 + 0.5) * PI;
        let (mut lo, mut hi) = (c - 1.0, c + 1.0);
        if f(lo).signum() == f(hi).signum() {
            n += 1;
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
        n += 1;
    }
    out
}

pub fn oracle(name: &str) -> Result<Oracle> {
    let sqrt4pi = (4.0 * PI).sqrt();
    let o = match name {
        "interval-dirichlet" => Oracle {
            name: name.into(),
            description: "-u'' on [0, pi], Dirichlet ends; eigenvalues k^2".into(),
            elliptic: true,
            symmetric: true,
            positive: true,
            total_length: PI,
            eigenvalues: (1..=20).map(|k| ((k * k) as f64, 1)).collect(),
            alpha0: Some(PI / sqrt4pi),
            alpha1: Some(-0.5),
            weyl_constant: Some(1.0),
        },
        "interval-neumann" => Oracle {
            name: name.into(),
            description: "-u'' on [0, pi], Neumann ends; eigenvalues k^2, k >= 0".into(),
            elliptic: true,
            symmetric: true,
            positive: false,
            total_length: PI,
            eigenvalues: (0..20).map(|k| ((k * k) as f64, 1)).collect(),
            alpha0: Some(PI / sqrt4pi),
            alpha1: Some(0.5),
            weyl_constant: Some(1.0),
        },
        "star3-kirchhoff" => Oracle {
            name: name.into(),
            description: "three unit edges, Kirchhoff center, Dirichlet leaves; k = pi/2 + n pi (simple), n pi (double)".into(),
            elliptic: true,
            symmetric: true,
            positive: true,
            total_length: 3.0,
            eigenvalues: (0..10)
                .flat_map(|n| {
                    let a = (PI / 2.0 + n as f64 * PI).powi(2);
                    let b = ((n + 1) as f64 * PI).powi(2);
                    [(a, 1), (b, 2)]
                })
                .collect(),
            alpha0: Some(3.0 / sqrt4pi),
            alpha1: Some(-1.0),
            weyl_constant: Some((PI / 3.0).powi(2)),
        },
        "star3-delta" => Oracle {
            name: name.into(),
            description: format!(
                "star3-kirchhoff with delta strength {DELTA_STRENGTH}; antisymmetric modes (n pi)^2 (double) unchanged"
            ),
            elliptic: true,
            symmetric: true,
            positive: true,
            total_length: 3.0,
            eigenvalues: (1..=10).map(|n| ((n as f64 * PI).powi(2), 2)).collect(),
            alpha0: Some(3.0 / sqrt4pi),
            alpha1: Some(-1.0),
            weyl_constant: Some((PI / 3.0).powi(2)),
        },
        "circle-glued" => Oracle {
            name: name.into(),
            description: "two unit intervals glued at both ends: circle of length 2; {0} and (n pi)^2 double".into(),
            elliptic: true,
            symmetric: true,
            positive: false,
            total_length: 2.0,
            eigenvalues: std::iter::once((0.0, 1))
                .chain((1..20).map(|n| ((n as f64 * PI).powi(2), 2)))
                .collect(),
            alpha0: Some(2.0 / sqrt4pi),
            alpha1: Some(0.0),
            weyl_constant: Some((PI / 2.0).powi(2)),
        },
        "transmission-bad" => Oracle {
            name: name.into(),
            description: "u1 = u2, u1' = u2' in inward jets: the Lopatinsky matrix is singular".into(),
            elliptic: false,
            symmetric: false,
            positive: false,
            total_length: 2.0,
            eigenvalues: Vec::new(),
            alpha0: None,
            alpha1: None,
            weyl_constant: None,
        },
        "beam-clamped" => Oracle {
            name: name.into(),
            description: "u'''' on [0, 1], clamped ends; eigenvalues b^4 with cos b cosh b = 1".into(),
            elliptic: true,
            symmetric: true,
            positive: true,
            total_length: 1.0,
            eigenvalues: clamped_beam_roots(10).into_iter().map(|b| (b.powi(4), 1)).collect(),
            alpha0: Some(1.0 / PI * statrs::function::gamma::gamma(1.25)),
            alpha1: None,
            weyl_constant: Some(PI.powi(4)),
        },
        other => return Err(Error::UnknownExample(other.into())),
    };
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates() {
        for (name, p) in all() {
            let rep = p.validate();
            assert!(rep.errors.is_empty(), "{name}: {:?}", rep.errors);
            assert!(rep.warnings.is_empty(), "{name}: {:?}", rep.warnings);
        }
        assert!(split_interval_dirichlet().validate().is_ok());
    }

    #[test]
    fn circle_is_two_edges_two_kirchhoff_vertices() {
        let p = circle_glued();
        assert_eq!(p.graph.edges.len(), 2);
        assert_eq!(p.graph.vertices.len(), 2);
        assert!(p.graph.vertices.iter().all(|v| v.degree() == 2));
        assert!(p.couplings.iter().all(|c| c.rows == 2));
    }

    #[test]
    fn beam_roots() {
        let r = clamped_beam_roots(3);
        assert!((r[0] - 4.730040744862704).abs() < 1e-12);
        assert!((r[1] - 7.853204624095838).abs() < 1e-12);
        assert!((r[2] - 10.995607838001671).abs() < 1e-12);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(by_name("nope"), Err(Error::UnknownExample(_))));
    }
}
