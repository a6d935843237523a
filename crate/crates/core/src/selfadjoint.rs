//! Symmetry of the realization `A_C` in the weighted `L2` space of the graph.
//!
//! Second-order problems of the form `-u'' + a_0 u` with Hermitian `a_0` are
//! decided exactly from the vertex rows: with `P = M_0`, `Q = M_1` and the
//! per-channel edge weights `W`, the realization is self-adjoint iff
//! `[P | Q]` has full rank `d_v r` and `P W^-1 Q*` is Hermitian at every vertex.
//! Everything else goes through the Green identity on admissible
//! trigonometric polynomials.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{BoundaryContactProblem, Side};
use crate::numeric::linalg::{self, CMat, C64};
use crate::numeric::quad;

/// Frequencies `0..=TRIG_DEGREE` of `cos(j pi x / len)` and `sin(j pi x / len)` per edge.
const TRIG_DEGREE: usize = 6;
const QUAD_NODES: usize = 48;
pub const GREEN_PAIRS: usize = 50;
const SEED: u64 = 0x5eed_b0c5;
/// Green defect, relative to `|Au| |v| + |u| |Av|`, above which a problem is declared non-symmetric.
const GREEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BoundaryForm,
    GreenIdentity,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfAdjointnessReport {
    pub symmetric: bool,
    pub positive_hint: bool,
    pub method: Method,
    /// Largest `|<Au,v> - <u,Av>| / (|u| |v|)` over the random admissible pairs.
    pub green_defect: f64,
    /// Lowest Rayleigh-Ritz value of the Hermitian part on the admissible trial space.
    pub lowest_ritz: f64,
}

fn is_hermitian(m: &CMat, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol * (1.0 + m.norm())
}

fn boundary_form_applies(p: &BoundaryContactProblem) -> bool {
    if p.order() != 2 {
        return false;
    }
    let r = p.rank();
    let minus_id = -CMat::identity(r, r);
    p.operators.iter().all(|op| {
        op.coeffs[2].is_constant()
            && op.coeffs[2].coeffs[0] == minus_id
            && op.coeffs[1].is_zero()
            && op.coeffs[0].coeffs.iter().all(|c| is_hermitian(c, 0.0))
    })
}

/// Per-channel inverse edge weights at a vertex.
fn inverse_weights(p: &BoundaryContactProblem, vertex: usize) -> CMat {
    let r = p.rank();
    let vert = &p.graph.vertices[vertex];
    let mut w = CMat::zeros(vert.degree() * r, vert.degree() * r);
    for (i, ep) in vert.endpoints.iter().enumerate() {
        let wt = p.graph.edge_weight(ep.edge);
        for c in 0..r {
            w[(i * r + c, i * r + c)] = C64::new(1.0 / wt, 0.0);
        }
    }
    w
}

fn boundary_form_symmetric(p: &BoundaryContactProblem) -> bool {
    let r = p.rank();
    p.couplings.iter().enumerate().all(|(v, cc)| {
        let n = p.graph.vertices[v].degree() * r;
        if cc.rows != n || linalg::rank(&cc.stacked(), 1e-12) != n {
            return false;
        }
        let form = &cc.blocks[0] * inverse_weights(p, v) * cc.blocks[1].adjoint();
        is_hermitian(&form, 1e-12)
    })
}

/// `d^k/dx^k` of `cos(w x)` (`sine = false`) or `sin(w x)` at `x`.
fn trig_derivative(sine: bool, w: f64, k: usize, x: f64) -> f64 {
    let phase = w * x + k as f64 * std::f64::consts::FRAC_PI_2;
    let amp = w.powi(k as i32);
    if sine {
        amp * phase.sin()
    } else if k == 0 {
        phase.cos()
    } else {
        amp * phase.cos()
    }
}

struct TrialSpace {
    /// Hermitian form `<A phi_j, phi_i>` restricted to admissible functions.
    a: CMat,
    gram: CMat,
}

/// Builds the admissible trial space and the restricted forms.
fn trial_space(p: &BoundaryContactProblem) -> Option<TrialSpace> {
    let m = p.order();
    let r = p.rank();
    let per_comp = 2 * TRIG_DEGREE + 1;
    let per_edge = per_comp * r;
    let n = per_edge * p.graph.edges.len();
    // (sine, frequency index) for each scalar basis function on an edge.
    let funcs: Vec<(bool, usize)> = (0..=TRIG_DEGREE)
        .map(|j| (false, j))
        .chain((1..=TRIG_DEGREE).map(|j| (true, j)))
        .collect();

    let mut constraints = CMat::zeros(p.total_rows(), n);
    let mut row0 = 0;
    for (v, cc) in p.couplings.iter().enumerate() {
        for (pi, ep) in p.graph.vertices[v].endpoints.iter().enumerate() {
            let len = p.graph.edges[ep.edge].length;
            let x = if ep.side == Side::Left { 0.0 } else { len };
            for (fi, &(sine, j)) in funcs.iter().enumerate() {
                let w = j as f64 * std::f64::consts::PI / len;
                for k in 0..m {
                    let sign = if ep.side == Side::Right && k % 2 == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    let jet = sign * trig_derivative(sine, w, k, x);
                    for c in 0..r {
                        let col = ep.edge * per_edge + c * per_comp + fi;
                        for row in 0..cc.rows {
                            constraints[(row0 + row, col)] += cc.blocks[k][(row, pi * r + c)] * jet;
                        }
                    }
                }
            }
        }
        row0 += cc.rows;
    }
    let rank = linalg::rank(&constraints, 1e-11);
    if rank >= n {
        return None;
    }
    let z = if constraints.nrows() == 0 {
        CMat::identity(n, n)
    } else {
        linalg::smallest_right_singular_vectors(&constraints, n - rank)
    };

    let mut aform = CMat::zeros(n, n);
    let mut gram = CMat::zeros(n, n);
    for (e, (edge, op)) in p.graph.edges.iter().zip(&p.operators).enumerate() {
        let weight = p.graph.edge_weight(e);
        let (xs, ws) = quad::gauss_legendre_on(QUAD_NODES, 0.0, edge.length);
        for (&x, &qw) in xs.iter().zip(&ws) {
            let coeffs: Vec<CMat> = (0..=m).map(|k| op.coefficient(k, x)).collect();
            // Column fi*r.. of `vals` holds phi_fi e_c; `avals` its image under A.
            let mut vals = CMat::zeros(r, per_edge);
            let mut avals = CMat::zeros(r, per_edge);
            for (fi, &(sine, j)) in funcs.iter().enumerate() {
                let w = j as f64 * std::f64::consts::PI / edge.length;
                for c in 0..r {
                    let col = c * per_comp + fi;
                    vals[(c, col)] = C64::new(trig_derivative(sine, w, 0, x), 0.0);
                    for (k, ak) in coeffs.iter().enumerate() {
                        let d = trig_derivative(sine, w, k, x);
                        for row in 0..r {
                            avals[(row, col)] += ak[(row, c)] * d;
                        }
                    }
                }
            }
            let s = C64::new(qw * weight, 0.0);
            let base = e * per_edge;
            let ablk = vals.adjoint() * &avals * s;
            let gblk = vals.adjoint() * &vals * s;
            let mut av = aform.view_mut((base, base), (per_edge, per_edge));
            av += &ablk;
            let mut gv = gram.view_mut((base, base), (per_edge, per_edge));
            gv += &gblk;
        }
    }
    Some(TrialSpace {
        a: z.adjoint() * aform * &z,
        gram: z.adjoint() * gram * &z,
    })
}

fn quad_form(x: &CMat, m: &CMat, y: &CMat) -> C64 {
    (x.adjoint() * m * y)[(0, 0)]
}

/// Largest relative Green defects over seeded random admissible pairs:
/// `(relative to |u||v|, relative to |Au||v| + |u||Av|)`.
fn green_defects(ts: &TrialSpace) -> (f64, f64) {
    let n = ts.a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let random_vec = |rng: &mut ChaCha8Rng| {
        CMat::from_fn(n, 1, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    };
    let ginv = linalg::inverse(&ts.gram).unwrap_or_else(|| CMat::identity(n, n));
    let (mut plain, mut scaled) = (0.0f64, 0.0f64);
    for _ in 0..GREEN_PAIRS {
        let a = random_vec(&mut rng);
        let b = random_vec(&mut rng);
        let au_v = quad_form(&b, &ts.a, &a);
        let u_av = quad_form(&a, &ts.a, &b).conj();
        let nu = quad_form(&a, &ts.gram, &a).re.sqrt();
        let nv = quad_form(&b, &ts.gram, &b).re.sqrt();
        // |Au| via the Galerkin projection of Au onto the trial space.
        let pa = &ginv * &ts.a * &a;
        let pb = &ginv * &ts.a * &b;
        let nau = quad_form(&pa, &ts.gram, &pa).re.max(0.0).sqrt();
        let nav = quad_form(&pb, &ts.gram, &pb).re.max(0.0).sqrt();
        let d = (au_v - u_av).norm();
        plain = plain.max(d / (nu * nv));
        scaled = scaled.max(d / (nau * nv + nu * nav).max(f64::MIN_POSITIVE));
    }
    (plain, scaled)
}

fn lowest_ritz(ts: &TrialSpace) -> f64 {
    let h = (&ts.a + ts.a.adjoint()) * C64::new(0.5, 0.0);
    let Some(chol) = ts.gram.clone().cholesky() else {
        return f64::NAN;
    };
    let l = chol.l();
    let Some(linv) = linalg::inverse(&l) else {
        return f64::NAN;
    };
    let reduced = &linv * h * linv.adjoint();
    let herm = (&reduced + reduced.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn self_adjointness_report(p: &BoundaryContactProblem) -> SelfAdjointnessReport {
    let ts = trial_space(p);
    let (plain, scaled, ritz) = match &ts {
        Some(ts) => {
            let (a, b) = green_defects(ts);
            (a, b, lowest_ritz(ts))
        }
        None => (f64::INFINITY, f64::INFINITY, f64::NAN),
    };
    let (method, symmetric) = if boundary_form_applies(p) {
        (Method::BoundaryForm, boundary_form_symmetric(p))
    } else {
        (Method::GreenIdentity, scaled <= GREEN_TOL && square_rows(p))
    };
    let scale = ts
        .as_ref()
        .map(|t| t.a.norm() / t.gram.norm().max(f64::MIN_POSITIVE))
        .unwrap_or(1.0);
    SelfAdjointnessReport {
        symmetric,
        positive_hint: symmetric && ritz > 1e-9 * scale.max(1.0),
        method,
        green_defect: plain,
        lowest_ritz: ritz,
    }
}

fn square_rows(p: &BoundaryContactProblem) -> bool {
    p.total_rows() == p.order() * p.rank() * p.graph.edges.len()
}
