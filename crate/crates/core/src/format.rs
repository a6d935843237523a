//! JSON problem files: parsing with field provenance, emission, canonical hashing.
//!
//! Complex numbers are `[re, im]` pairs, matrices are row-major nested arrays,
//! and the sector is given in degrees. Unknown keys are rejected.

use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{
    BoundaryContactProblem, CouplingCondition, Edge, EdgeOperator, Endpoint, MatPoly, MetricGraph,
    Sector, Side, Vertex,
};
use crate::numeric::{CMat, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// A complex number written as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex(pub C64);

impl Serialize for Complex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Complex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct PairVisitor;

        impl<'de> Visitor<'de> for PairVisitor {
            type Value = Complex;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("complex pair expected: [re, im]")
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Complex, A::Error> {
                let missing = || de::Error::custom("complex pair expected: [re, im]");
                let re: f64 = seq.next_element()?.ok_or_else(missing)?;
                let im: f64 = seq.next_element()?.ok_or_else(missing)?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(missing());
                }
                Ok(Complex(C64::new(re, im)))
            }
        }

        d.deserialize_seq(PairVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Left,
    Right,
}

impl From<End> for Side {
    fn from(e: End) -> Side {
        match e {
            End::Left => Side::Left,
            End::Right => Side::Right,
        }
    }
}

impl From<Side> for End {
    fn from(s: Side) -> End {
        match s {
            Side::Left => End::Left,
            Side::Right => End::Right,
        }
    }
}

/// Row-major complex matrix.
pub type MatrixFile = Vec<Vec<Complex>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFile {
    pub id: String,
    pub length: f64,
    /// `coefficients[k][p]` is the `x^p` matrix coefficient of `a_k`.
    pub coefficients: Vec<Vec<MatrixFile>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointFile {
    pub edge: String,
    pub end: End,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsFile {
    pub rows: usize,
    pub blocks: Vec<MatrixFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexFile {
    pub id: String,
    pub endpoints: Vec<EndpointFile>,
    pub conditions: ConditionsFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorFile {
    pub center_arg_deg: f64,
    pub half_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub order: usize,
    pub fiber_rank: usize,
    pub edges: Vec<EdgeFile>,
    pub vertices: Vec<VertexFile>,
    pub sector: SectorFile,
}

fn matrix_to_file(m: &CMat) -> MatrixFile {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Complex(m[(i, j)])).collect())
        .collect()
}

fn matrix_from_file(
    rows: &MatrixFile,
    shape: (usize, usize),
    at: &str,
    errors: &mut Vec<String>,
) -> CMat {
    let (nr, nc) = shape;
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        let got_cols = rows.first().map(|r| r.len()).unwrap_or(0);
        errors.push(format!(
            "{at}: shape mismatch: expected {nr}x{nc}, got {}x{got_cols}",
            rows.len()
        ));
        return CMat::zeros(nr, nc);
    }
    CMat::from_fn(nr, nc, |i, j| rows[i][j].0)
}

impl ProblemFile {
    pub fn from_problem(p: &BoundaryContactProblem) -> Self {
        let (center, half) = p.sector.degrees();
        ProblemFile {
            schema_version: SCHEMA_VERSION,
            order: p.order(),
            fiber_rank: p.rank(),
            edges: p
                .graph
                .edges
                .iter()
                .zip(&p.operators)
                .map(|(e, op)| EdgeFile {
                    id: e.id.clone(),
                    length: e.length,
                    coefficients: op
                        .coeffs
                        .iter()
                        .map(|poly| poly.coeffs.iter().map(matrix_to_file).collect())
                        .collect(),
                })
                .collect(),
            vertices: p
                .graph
                .vertices
                .iter()
                .zip(&p.couplings)
                .map(|(v, cc)| VertexFile {
                    id: v.id.clone(),
                    endpoints: v
                        .endpoints
                        .iter()
                        .map(|ep| EndpointFile {
                            edge: p.graph.edges[ep.edge].id.clone(),
                            end: ep.side.into(),
                            weight: ep.weight,
                        })
                        .collect(),
                    conditions: ConditionsFile {
                        rows: cc.rows,
                        blocks: cc.blocks.iter().map(matrix_to_file).collect(),
                    },
                })
                .collect(),
            sector: SectorFile {
                center_arg_deg: center,
                half_angle_deg: half,
            },
        }
    }

    /// Builds the in-memory problem; shape and reference errors carry field paths.
    pub fn to_problem(&self) -> std::result::Result<BoundaryContactProblem, Vec<String>> {
        let mut errors = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errors.push(format!(
                "schema_version: unsupported version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        let r = self.fiber_rank;
        let m = self.order;
        let mut edges = Vec::new();
        let mut operators = Vec::new();
        for (ei, e) in self.edges.iter().enumerate() {
            if self.edges[..ei].iter().any(|o| o.id == e.id) {
                errors.push(format!("edges[{ei}].id: duplicate edge id '{}'", e.id));
            }
            if e.coefficients.len() != m + 1 {
                errors.push(format!(
                    "edges[{ei}].coefficients: shape mismatch: expected {} coefficients a_0..a_{m}, got {}",
                    m + 1,
                    e.coefficients.len()
                ));
            }
            let coeffs = e
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, powers)| {
                    if powers.is_empty() {
                        errors.push(format!("edges[{ei}].coefficients[{k}]: empty polynomial"));
                        return MatPoly::zero(r);
                    }
                    MatPoly {
                        coeffs: powers
                            .iter()
                            .enumerate()
                            .map(|(p, mat)| {
                                matrix_from_file(
                                    mat,
                                    (r, r),
                                    &format!("edges[{ei}].coefficients[{k}][{p}]"),
                                    &mut errors,
                                )
                            })
                            .collect(),
                    }
                })
                .collect();
            edges.push(Edge {
                id: e.id.clone(),
                length: e.length,
            });
            operators.push(EdgeOperator {
                order: m,
                rank: r,
                coeffs,
            });
        }
        let mut vertices = Vec::new();
        let mut couplings = Vec::new();
        for (vi, v) in self.vertices.iter().enumerate() {
            if self.vertices[..vi].iter().any(|o| o.id == v.id) {
                errors.push(format!("vertices[{vi}].id: duplicate vertex id '{}'", v.id));
            }
            let mut endpoints = Vec::new();
            for (pi, ep) in v.endpoints.iter().enumerate() {
                match self.edges.iter().position(|e| e.id == ep.edge) {
                    Some(edge) => endpoints.push(Endpoint {
                        edge,
                        side: ep.end.into(),
                        weight: ep.weight,
                    }),
                    None => errors.push(format!(
                        "vertices[{vi}].endpoints[{pi}].edge: unknown edge '{}'",
                        ep.edge
                    )),
                }
            }
            let cols = v.endpoints.len() * r;
            let cond = &v.conditions;
            if cond.blocks.len() != m {
                errors.push(format!(
                    "vertices[{vi}].conditions.blocks: shape mismatch: expected {m} blocks, got {}",
                    cond.blocks.len()
                ));
            }
            let blocks = cond
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    matrix_from_file(
                        b,
                        (cond.rows, cols),
                        &format!("vertices[{vi}].conditions.blocks[{k}]"),
                        &mut errors,
                    )
                })
                .collect();
            vertices.push(Vertex {
                id: v.id.clone(),
                endpoints,
            });
            couplings.push(CouplingCondition {
                rows: cond.rows,
                blocks,
            });
        }
        let sector =
            match Sector::from_degrees(self.sector.center_arg_deg, self.sector.half_angle_deg) {
                Ok(s) => Some(s),
                Err(e) => {
                    errors.push(format!("sector: {e}"));
                    None
                }
            };
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(BoundaryContactProblem {
            graph: MetricGraph { edges, vertices },
            operators,
            couplings,
            sector: sector.expect("checked above"),
        })
    }
}

/// Parses and validates a problem file, collecting every error with its field path.
pub fn parse_problem_report(
    text: &str,
) -> std::result::Result<BoundaryContactProblem, Vec<String>> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ProblemFile = match serde_path_to_error::deserialize(&mut de) {
        Ok(f) => f,
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = if path == "." {
                String::new()
            } else {
                format!("{path}: ")
            };
            return Err(vec![format!("{at}{inner}")]);
        }
    };
    if let Err(e) = de.end() {
        return Err(vec![e.to_string()]);
    }
    let problem = file.to_problem()?;
    let report = problem.validate();
    if !report.errors.is_empty() {
        return Err(report.errors);
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(problem)
}

pub fn parse_problem(text: &str) -> Result<BoundaryContactProblem> {
    parse_problem_report(text).map_err(|errs| Error::Parse(errs.join("; ")))
}

pub fn emit_problem(p: &BoundaryContactProblem) -> String {
    let mut s = serde_json::to_string_pretty(&ProblemFile::from_problem(p))
        .expect("problem files serialize");
    s.push('\n');
    s
}

fn normalize_zeros(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if n.as_f64() == Some(0.0) && n.to_string().starts_with('-') {
                *v = serde_json::json!(0.0);
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(normalize_zeros),
        serde_json::Value::Object(o) => o.values_mut().for_each(normalize_zeros),
        _ => {}
    }
}

/// Compact JSON with sorted keys and shortest round-trip numbers.
pub fn canonical_json(p: &BoundaryContactProblem) -> String {
    let mut v =
        serde_json::to_value(ProblemFile::from_problem(p)).expect("problem files serialize");
    normalize_zeros(&mut v);
    v.to_string()
}

pub fn canonical_hash(p: &BoundaryContactProblem) -> String {
    sha256_hex(canonical_json(p).as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Formats a real for CSV output with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}
