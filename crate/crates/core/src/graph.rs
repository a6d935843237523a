//! Metric graphs, edge operators and vertex coupling conditions.
//!
//! A boundary contact problem on a one-dimensional space is a metric graph whose
//! edge endpoints are partitioned among vertices, an ordinary differential operator
//! `A u = sum_k a_k(x) (d/dx)^k u` on every edge (all of the same even order `m`
//! and fiber rank `r`), one block of linear relations per vertex among the inward
//! jets of the endpoints meeting there, and the sector in which the spectral
//! parameter ranges.
//!
//! Jets are always taken in the inward collar coordinate: at a left end the `k`-th
//! jet is `u^(k)(0)`, at a right end it is `(-1)^k u^(k)(len)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::linalg::{self, CMat, C64, ZERO};
use crate::numeric::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub length: f64,
}

/// One edge end as seen from a vertex, with its fiber weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub edge: usize,
    pub side: Side,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub endpoints: Vec<Endpoint>,
}

impl Vertex {
    pub fn degree(&self) -> usize {
        self.endpoints.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    pub edges: Vec<Edge>,
    pub vertices: Vec<Vertex>,
}

impl MetricGraph {
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min)
    }

    /// The vertex and position in its endpoint list covering `(edge, side)`.
    pub fn locate(&self, edge: usize, side: Side) -> Option<(usize, usize)> {
        self.vertices.iter().enumerate().find_map(|(v, vert)| {
            vert.endpoints
                .iter()
                .position(|p| p.edge == edge && p.side == side)
                .map(|i| (v, i))
        })
    }

    /// Weight of the edge in the graph inner product: the fiber weight at its left end.
    pub fn edge_weight(&self, edge: usize) -> f64 {
        self.locate(edge, Side::Left)
            .map(|(v, i)| self.vertices[v].endpoints[i].weight)
            .unwrap_or(1.0)
    }
}

/// Polynomial in `x` with `r x r` matrix coefficients, ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly {
    pub coeffs: Vec<CMat>,
}

impl MatPoly {
    pub fn constant(m: CMat) -> Self {
        Self { coeffs: vec![m] }
    }

    pub fn scalar(c: C64) -> Self {
        Self::constant(CMat::from_element(1, 1, c))
    }

    pub fn zero(r: usize) -> Self {
        Self::constant(CMat::zeros(r, r))
    }

    pub fn eval(&self, x: f64) -> CMat {
        let mut it = self.coeffs.iter().rev();
        let mut acc = it
            .next()
            .cloned()
            .expect("polynomial has at least one coefficient");
        for c in it {
            acc = acc * C64::new(x, 0.0) + c;
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs
            .iter()
            .skip(1)
            .all(|c| c.iter().all(|z| *z == ZERO))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|z| *z == ZERO))
    }

    fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// `A = sum_k a_k(x) (d/dx)^k` on one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeOperator {
    pub order: usize,
    pub rank: usize,
    /// `coeffs[k]` multiplies the `k`-th derivative, `k = 0..=order`.
    pub coeffs: Vec<MatPoly>,
}

impl EdgeOperator {
    /// Scalar operator with constant coefficients, `coeffs[k]` for `k = 0..=order`.
    pub fn scalar_constant(coeffs: &[f64]) -> Self {
        Self {
            order: coeffs.len() - 1,
            rank: 1,
            coeffs: coeffs
                .iter()
                .map(|&c| MatPoly::scalar(C64::new(c, 0.0)))
                .collect(),
        }
    }

    /// `-d^2/dx^2`.
    pub fn laplacian() -> Self {
        Self::scalar_constant(&[0.0, 0.0, -1.0])
    }

    pub fn leading(&self, x: f64) -> CMat {
        self.coeffs[self.order].eval(x)
    }

    pub fn coefficient(&self, k: usize, x: f64) -> CMat {
        self.coeffs[k].eval(x)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(MatPoly::is_constant)
    }
}

/// Linear relations `sum_k blocks[k] * J_k = 0` among the inward jets at a vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCondition {
    pub rows: usize,
    /// `blocks[k]` is `rows x (degree * rank)` and acts on the `k`-th jets.
    pub blocks: Vec<CMat>,
}

impl CouplingCondition {
    pub fn from_real_blocks(rows: usize, cols: usize, blocks: &[&[f64]]) -> Self {
        Self {
            rows,
            blocks: blocks
                .iter()
                .map(|b| {
                    CMat::from_iterator(cols, rows, b.iter().map(|&v| C64::new(v, 0.0))).transpose()
                })
                .collect(),
        }
    }

    /// `[M_0 | M_1 | ... | M_{m-1}]`.
    pub fn stacked(&self) -> CMat {
        let cols: usize = self.blocks.iter().map(|b| b.ncols()).sum();
        let mut out = CMat::zeros(self.rows, cols);
        let mut off = 0;
        for b in &self.blocks {
            out.view_mut((0, off), (b.nrows(), b.ncols())).copy_from(b);
            off += b.ncols();
        }
        out
    }

    /// Left-multiplies every block by `s`.
    pub fn recombined(&self, s: &CMat) -> Self {
        Self {
            rows: s.nrows(),
            blocks: self.blocks.iter().map(|b| s * b).collect(),
        }
    }
}

/// `{ r e^{i phi} : r >= 0, |phi - center| <= half_angle }`, angles in radians.
///
/// The degree values a sector was built from are kept so files round-trip exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub center: f64,
    pub half_angle: f64,
    degrees: (f64, f64),
}

impl Sector {
    pub fn new(center: f64, half_angle: f64) -> Result<Self> {
        Self::checked(
            center,
            half_angle,
            (center.to_degrees(), half_angle.to_degrees()),
        )
    }

    pub fn from_degrees(center_deg: f64, half_angle_deg: f64) -> Result<Self> {
        Self::checked(
            center_deg.to_radians(),
            half_angle_deg.to_radians(),
            (center_deg, half_angle_deg),
        )
    }

    fn checked(center: f64, half_angle: f64, degrees: (f64, f64)) -> Result<Self> {
        if !(half_angle > 0.0 && half_angle <= PI * (1.0 + 1e-15)) || !center.is_finite() {
            return Err(Error::Invalid(format!(
                "sector half-angle must lie in (0, pi], got {half_angle}"
            )));
        }
        Ok(Self {
            center,
            half_angle: half_angle.min(PI),
            degrees,
        })
    }

    /// `(center, half_angle)` in degrees.
    pub fn degrees(&self) -> (f64, f64) {
        self.degrees
    }

    pub fn contains(&self, z: C64) -> bool {
        if z == ZERO {
            return true;
        }
        wrap_angle(z.arg() - self.center).abs() <= self.half_angle
    }

    /// Whether `z` lies in the interior of the sector (excluding the origin).
    pub fn contains_interior(&self, z: C64) -> bool {
        z != ZERO
            && (self.half_angle >= PI || wrap_angle(z.arg() - self.center).abs() < self.half_angle)
    }

    /// `n` unit-modulus points equally spaced in argument, both arc ends included.
    pub fn arc(&self, n: usize) -> Vec<C64> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let t = -self.half_angle + 2.0 * self.half_angle * i as f64 / (n - 1) as f64;
                C64::from_polar(1.0, self.center + t)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryContactProblem {
    pub graph: MetricGraph,
    /// One operator per edge, aligned with `graph.edges`.
    pub operators: Vec<EdgeOperator>,
    /// One coupling condition per vertex, aligned with `graph.vertices`.
    pub couplings: Vec<CouplingCondition>,
    pub sector: Sector,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Number of sample points (besides the endpoints) for leading-coefficient checks.
pub const LEADING_SAMPLES: usize = 16;

impl BoundaryContactProblem {
    pub fn order(&self) -> usize {
        self.operators.first().map(|o| o.order).unwrap_or(0)
    }

    pub fn rank(&self) -> usize {
        self.operators.first().map(|o| o.rank).unwrap_or(0)
    }

    /// Jet dimension per edge end, `m * r`.
    pub fn jet_dim(&self) -> usize {
        self.order() * self.rank()
    }

    pub fn total_rows(&self) -> usize {
        self.couplings.iter().map(|c| c.rows).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let g = &self.graph;
        for e in &g.edges {
            if !(e.length.is_finite() && e.length > 0.0) {
                rep.errors
                    .push(format!("edge {}: length must be positive and finite", e.id));
            }
        }
        let mut cover = vec![[0usize; 2]; g.edges.len()];
        for v in &g.vertices {
            if v.endpoints.is_empty() {
                rep.errors.push(format!("vertex {}: no endpoints", v.id));
            }
            for p in &v.endpoints {
                if p.edge >= g.edges.len() {
                    rep.errors
                        .push(format!("vertex {}: unknown edge index {}", v.id, p.edge));
                    continue;
                }
                if !(p.weight.is_finite() && p.weight > 0.0) {
                    rep.errors.push(format!(
                        "vertex {}: weight of {} {} end must be positive and finite",
                        v.id,
                        g.edges[p.edge].id,
                        p.side.as_str()
                    ));
                }
                cover[p.edge][p.side as usize] += 1;
            }
        }
        for (e, c) in cover.iter().enumerate() {
            for (s, &n) in c.iter().enumerate() {
                let side = if s == 0 { "left" } else { "right" };
                if n > 1 {
                    rep.errors.push(format!(
                        "endpoint multiply covered: {} {side} end",
                        g.edges[e].id
                    ));
                } else if n == 0 {
                    rep.errors.push(format!(
                        "endpoint not covered: {} {side} end",
                        g.edges[e].id
                    ));
                }
            }
        }
        for (e, edge) in g.edges.iter().enumerate() {
            if let (Some((vl, il)), Some((vr, ir))) =
                (g.locate(e, Side::Left), g.locate(e, Side::Right))
            {
                let wl = g.vertices[vl].endpoints[il].weight;
                let wr = g.vertices[vr].endpoints[ir].weight;
                if wl != wr {
                    rep.warnings.push(format!(
                        "edge {}: end weights differ ({wl} vs {wr}); the left-end weight is used in L2",
                        edge.id
                    ));
                }
            }
        }

        if self.operators.len() != g.edges.len() {
            rep.errors.push(format!(
                "expected {} edge operators, got {}",
                g.edges.len(),
                self.operators.len()
            ));
            return rep;
        }
        let m = self.order();
        let r = self.rank();
        if m == 0 || !m.is_multiple_of(2) {
            rep.errors
                .push(format!("order must be even and positive, got {m}"));
        }
        if r == 0 {
            rep.errors.push("fiber rank must be at least 1".into());
        }
        for (op, edge) in self.operators.iter().zip(&g.edges) {
            if op.order != m || op.rank != r {
                rep.errors.push(format!(
                    "edge {}: operator order/rank differ from the problem's",
                    edge.id
                ));
                continue;
            }
            if op.coeffs.len() != m + 1 {
                rep.errors.push(format!(
                    "edge {}: expected {} coefficients, got {}",
                    edge.id,
                    m + 1,
                    op.coeffs.len()
                ));
                continue;
            }
            let mut shapes_ok = true;
            for (k, p) in op.coeffs.iter().enumerate() {
                if p.coeffs.is_empty() || p.coeffs.iter().any(|c| c.nrows() != r || c.ncols() != r)
                {
                    rep.errors.push(format!(
                        "edge {}: coefficient a_{k} is not {r}x{r}",
                        edge.id
                    ));
                    shapes_ok = false;
                } else if !p.is_finite() {
                    rep.errors.push(format!(
                        "edge {}: coefficient a_{k} has non-finite entries",
                        edge.id
                    ));
                    shapes_ok = false;
                }
            }
            if shapes_ok && edge.length.is_finite() && edge.length > 0.0 {
                for i in 0..LEADING_SAMPLES + 2 {
                    let x = edge.length * i as f64 / (LEADING_SAMPLES + 1) as f64;
                    let lead = op.leading(x);
                    if linalg::rank(&lead, 1e-12) < r {
                        rep.errors.push(format!(
                            "edge {}: degenerate leading coefficient at x = {x}",
                            edge.id
                        ));
                        break;
                    }
                }
            }
        }

        if self.couplings.len() != g.vertices.len() {
            rep.errors.push(format!(
                "expected {} coupling conditions, got {}",
                g.vertices.len(),
                self.couplings.len()
            ));
            return rep;
        }
        for (cc, vert) in self.couplings.iter().zip(&g.vertices) {
            let cols = vert.degree() * r;
            if cc.blocks.len() != m {
                rep.errors.push(format!(
                    "vertex {}: expected {m} coupling blocks, got {}",
                    vert.id,
                    cc.blocks.len()
                ));
                continue;
            }
            if cc
                .blocks
                .iter()
                .any(|b| b.nrows() != cc.rows || b.ncols() != cols)
            {
                rep.errors.push(format!(
                    "vertex {}: coupling blocks must be {}x{cols}",
                    vert.id, cc.rows
                ));
                continue;
            }
            if cc.rows > 0 && linalg::rank(&cc.stacked(), 1e-12) < cc.rows {
                rep.errors.push(format!(
                    "vertex {}: coupling rows are not of full rank (redundant conditions)",
                    vert.id
                ));
            }
            let expected = m / 2 * vert.degree() * r;
            if cc.rows != expected {
                rep.warnings.push(format!(
                    "vertex {}: non-square: expected {expected} rows, got {}",
                    vert.id, cc.rows
                ));
            }
        }
        rep
    }

    /// Validates and turns the first error into an `Err`.
    pub fn ensure_valid(&self) -> Result<()> {
        let rep = self.validate();
        match rep.errors.into_iter().next() {
            Some(e) => Err(Error::Invalid(e)),
            None => Ok(()),
        }
    }

    /// Assembles raw endpoint derivatives into the `m x (degree * r)` fiber jet
    /// matrix of `vertex`, applying the inward sign convention.
    pub fn push_forward(&self, vertex: usize, jets: &[EndpointJet]) -> Result<CMat> {
        let vert = &self.graph.vertices[vertex];
        let m = self.order();
        let r = self.rank();
        let mut out = CMat::zeros(m, vert.degree() * r);
        for (i, p) in vert.endpoints.iter().enumerate() {
            let jet = jets
                .iter()
                .find(|j| j.edge == p.edge && j.side == p.side)
                .ok_or_else(|| {
                    Error::IncompleteFiber(format!(
                        "vertex {}: no jet for {} {} end",
                        vert.id,
                        self.graph.edges[p.edge].id,
                        p.side.as_str()
                    ))
                })?;
            if jet.derivatives.nrows() != m || jet.derivatives.ncols() != r {
                return Err(Error::Shape(format!("endpoint jet must be {m}x{r}")));
            }
            for k in 0..m {
                let sign = if p.side == Side::Right && k % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                for c in 0..r {
                    out[(k, i * r + c)] = jet.derivatives[(k, c)] * sign;
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`push_forward`](Self::push_forward).
    pub fn pull_back(&self, vertex: usize, fiber: &CMat) -> Result<Vec<EndpointJet>> {
        let vert = &self.graph.vertices[vertex];
        let m = self.order();
        let r = self.rank();
        if fiber.nrows() != m || fiber.ncols() != vert.degree() * r {
            return Err(Error::Shape(format!(
                "fiber jets must be {m}x{}",
                vert.degree() * r
            )));
        }
        Ok(vert
            .endpoints
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut d = CMat::zeros(m, r);
                for k in 0..m {
                    let sign = if p.side == Side::Right && k % 2 == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    for c in 0..r {
                        d[(k, c)] = fiber[(k, i * r + c)] * sign;
                    }
                }
                EndpointJet {
                    edge: p.edge,
                    side: p.side,
                    derivatives: d,
                }
            })
            .collect())
    }

    /// Weighted fiber norm squared `sum_p w_p |u_p|^2` of a vector over `vertex`.
    pub fn fiber_norm_sq(&self, vertex: usize, fiber_vector: &[C64]) -> Result<f64> {
        let vert = &self.graph.vertices[vertex];
        let r = self.rank();
        if fiber_vector.len() != vert.degree() * r {
            return Err(Error::Shape(format!(
                "fiber vector must have length {}",
                vert.degree() * r
            )));
        }
        Ok(vert
            .endpoints
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.weight
                    * fiber_vector[i * r..(i + 1) * r]
                        .iter()
                        .map(|z| z.norm_sqr())
                        .sum::<f64>()
            })
            .sum())
    }

    /// `sum_k M_{v,k} J_k` for fiber jets shaped `m x (degree * r)`.
    pub fn apply_coupling(&self, vertex: usize, jets: &CMat) -> Result<Vec<C64>> {
        let cc = &self.couplings[vertex];
        let cols = self.graph.vertices[vertex].degree() * self.rank();
        if jets.nrows() != self.order() || jets.ncols() != cols {
            return Err(Error::Shape(format!(
                "fiber jets must be {}x{cols}, got {}x{}",
                self.order(),
                jets.nrows(),
                jets.ncols()
            )));
        }
        let mut res = vec![ZERO; cc.rows];
        for (k, block) in cc.blocks.iter().enumerate() {
            for (row, out) in res.iter_mut().enumerate() {
                for c in 0..cols {
                    *out += block[(row, c)] * jets[(k, c)];
                }
            }
        }
        Ok(res)
    }

    /// Copy with every vertex block replaced by `s_v * M_{v,k}`.
    pub fn with_recombined_rows(&self, s: &[CMat]) -> Self {
        let mut out = self.clone();
        for (cc, sv) in out.couplings.iter_mut().zip(s) {
            *cc = cc.recombined(sv);
        }
        out
    }

    pub fn canonical_hash(&self) -> String {
        crate::format::canonical_hash(self)
    }
}

/// Raw derivatives `u^(k)` (rows `k = 0..m-1`, columns fiber components) at one edge end,
/// in the edge's own left-to-right coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointJet {
    pub edge: usize,
    pub side: Side,
    pub derivatives: CMat,
}
