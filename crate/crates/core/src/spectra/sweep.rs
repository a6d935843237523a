//! Real-spectrum sweeps with argument-principle certificates.
//!
//! The sweep runs in `k = sign(lambda) |lambda|^(1/m)`, where eigenvalues of
//! an order-`m` operator are asymptotically equidistant with spacing
//! `1 / weyl_coefficient`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ellipticity::{self, Sampling};
use crate::error::{Error, Result};
use crate::format::sha256_hex;
use crate::graph::BoundaryContactProblem;
use crate::numeric::linalg::{self, C64};
use crate::numeric::quad;
use crate::selfadjoint::self_adjointness_report;

use super::secular::{secular_matrix, MULTIPLICITY_THRESHOLD};
use super::SolverOptions;

/// Relative width in `k = lambda^(1/m)` at which root refinement stops.
pub const ROOT_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub lambda: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub a: f64,
    pub b: f64,
    /// Zeros of the secular determinant inside a thin rectangle around `[a, b]`.
    pub contour_count: i64,
    /// Sum of multiplicities of the eigenvalues located in `[a, b]`.
    pub found: usize,
    pub refinements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub order: usize,
    pub weyl_coefficient: f64,
    /// Bound on `|N(lambda) - weyl_coefficient * lambda^(1/m)|` used for tails.
    pub tail_constant: f64,
    pub total_length: f64,
    pub min_length: f64,
    pub lambda_lo: f64,
    pub oversample: usize,
    pub max_refinements: usize,
    pub force_numeric: bool,
}

impl SolverParams {
    /// Hash of everything that shapes a sweep except its upper end.
    pub fn digest(&self) -> String {
        let v = serde_json::to_value(self).expect("parameters serialize");
        sha256_hex(v.to_string().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub digest: String,
    pub eigenvalues: Vec<Eigenvalue>,
    pub window: (f64, f64),
    pub certificate: Vec<CertificateEntry>,
    pub params: SolverParams,
}

impl Spectrum {
    pub fn lambda_hi(&self) -> f64 {
        self.window.1
    }

    /// Eigenvalues repeated according to multiplicity.
    pub fn flat(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity))
            .collect()
    }

    /// `N(lambda)`: eigenvalues `<= lambda` counted with multiplicity.
    pub fn counting(&self, lambda: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|e| e.lambda <= lambda)
            .map(|e| e.multiplicity)
            .sum()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    /// True when every certificate entry agrees with the listed eigenvalues.
    ///
    /// An entry reaching past the window may contain eigenvalues that were
    /// not listed, so there only `listed <= found` is required.
    pub fn certificate_consistent(&self) -> bool {
        self.certificate.iter().all(|c| {
            let listed: usize = self
                .eigenvalues
                .iter()
                .filter(|e| e.lambda >= c.a && e.lambda <= c.b)
                .map(|e| e.multiplicity)
                .sum();
            let agrees = c.contour_count == c.found as i64;
            if c.b <= self.window.1 {
                agrees && listed == c.found
            } else {
                agrees && listed <= c.found
            }
        })
    }

    /// The part of the spectrum at or below `lambda_hi`.
    pub fn truncated(&self, lambda_hi: f64) -> Spectrum {
        Spectrum {
            digest: self.digest.clone(),
            eigenvalues: self
                .eigenvalues
                .iter()
                .copied()
                .filter(|e| e.lambda <= lambda_hi)
                .collect(),
            window: (self.window.0, lambda_hi.min(self.window.1)),
            certificate: self
                .certificate
                .iter()
                .filter(|c| c.a < lambda_hi)
                .cloned()
                .collect(),
            params: self.params.clone(),
        }
    }

    /// CSV with header `k,lambda,multiplicity`, one line per distinct eigenvalue.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,lambda,multiplicity\n");
        for (k, e) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{}\n",
                k + 1,
                crate::format::fmt_real(e.lambda),
                e.multiplicity
            ));
        }
        s
    }

    /// Parses the CSV written by [`Spectrum::to_csv`] into eigenvalues.
    pub fn eigenvalues_from_csv(text: &str) -> Result<Vec<Eigenvalue>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let bad = || {
                Error::Parse(format!(
                    "spectrum csv line {}: malformed row '{line}'",
                    i + 1
                ))
            };
            if cols.len() != 3 {
                return Err(bad());
            }
            let lambda: f64 = cols[1].trim().parse().map_err(|_| bad())?;
            let multiplicity: usize = cols[2].trim().parse().map_err(|_| bad())?;
            out.push(Eigenvalue {
                lambda,
                multiplicity,
            });
        }
        Ok(out)
    }
}

/// `c_W` in `N(lambda) ~ c_W lambda^(1/m)`:
/// `(1/pi) sum_e int_e sum_i |nu_i(x)|^(-1/m) dx`, with `nu_i` the eigenvalues
/// of `(-1)^(m/2) a_m(x)`.
pub fn weyl_coefficient(problem: &BoundaryContactProblem) -> f64 {
    let m = problem.order();
    let sign = if (m / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut total = 0.0;
    for (e, op) in problem.operators.iter().enumerate() {
        let len = problem.graph.edges[e].length;
        let density = |x: f64| -> f64 {
            let lead = op.leading(x) * C64::new(sign, 0.0);
            linalg::eigenvalues(&lead)
                .iter()
                .map(|nu| nu.norm().powf(-1.0 / m as f64))
                .sum()
        };
        total += if op.is_constant() {
            density(0.0) * len
        } else {
            quad::integrate(density, 0.0, len, 1, 16)
        };
    }
    total / std::f64::consts::PI
}

/// A negative spectral parameter safely below the spectrum.
///
/// Chooses `kappa` from the edge lengths, the size of the lower-order
/// coefficients relative to the leading one, and the ratio of low to high
/// jet orders in each coupling row, then returns `-kappa^m`.
pub fn default_lambda_lo(problem: &BoundaryContactProblem) -> f64 {
    let m = problem.order();
    let mut kappa = 20.0 / problem.graph.min_length();
    for (e, op) in problem.operators.iter().enumerate() {
        let len = problem.graph.edges[e].length;
        for i in 0..=4 {
            let x = len * i as f64 / 4.0;
            let inv = linalg::inverse(&op.leading(x))
                .map(|a| linalg::norm1(&a))
                .unwrap_or(1.0);
            for j in 0..m {
                let c = linalg::norm1(&op.coefficient(j, x)) * inv;
                if c > 0.0 {
                    kappa = kappa.max(10.0 * c.powf(1.0 / (m - j) as f64));
                }
            }
        }
    }
    for cc in &problem.couplings {
        for row in 0..cc.rows {
            let norms: Vec<f64> = cc.blocks.iter().map(|b| b.row(row).norm()).collect();
            if let Some(hi) = norms.iter().rposition(|&n| n > 0.0) {
                for (k, &n) in norms.iter().enumerate().take(hi) {
                    if n > 0.0 {
                        kappa = kappa.max(10.0 * (n / norms[hi]).powf(1.0 / (hi - k) as f64));
                    }
                }
            }
        }
    }
    -kappa.powi(m as i32)
}

fn lambda_of_k(k: f64, m: usize) -> f64 {
    k.signum() * k.abs().powi(m as i32)
}

fn k_of_lambda(lambda: f64, m: usize) -> f64 {
    lambda.signum() * lambda.abs().powf(1.0 / m as f64)
}

struct Sweeper<'a> {
    problem: &'a BoundaryContactProblem,
    opts: SolverOptions,
    m: usize,
    c_w: f64,
}

impl Sweeper<'_> {
    fn sigma_hat(&self, k: f64) -> Result<f64> {
        let lambda = lambda_of_k(k, self.m);
        Ok(secular_matrix(self.problem, C64::new(lambda, 0.0), &self.opts)?.sigma_hat())
    }

    fn phase(&self, z: C64) -> Result<C64> {
        let s = secular_matrix(self.problem, z, &self.opts)?;
        Ok(s.phase().unwrap_or(C64::new(1.0, 0.0)))
    }

    fn grid(&self, k0: f64, k1: f64, dk: f64) -> Vec<f64> {
        let n = ((k1 - k0) / dk).ceil().max(2.0) as usize;
        (0..=n)
            .map(|i| k0 + (k1 - k0) * i as f64 / n as f64)
            .collect()
    }

    fn golden(&self, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = self.sigma_hat(c)?;
        let mut fd = self.sigma_hat(d)?;
        for _ in 0..200 {
            if (b - a) <= ROOT_TOLERANCE * a.abs().max(b.abs()).max(1e-3) {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = self.sigma_hat(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = self.sigma_hat(d)?;
            }
        }
        Ok(if fc < fd { (c, fc) } else { (d, fd) })
    }

    /// Roots located between `grid[0]` and `grid[last]`, with multiplicities.
    fn roots(&self, grid: &[f64], sig: &[f64]) -> Result<Vec<(f64, usize)>> {
        let brackets: Vec<(f64, f64)> = (1..grid.len() - 1)
            .filter(|&i| sig[i] <= sig[i - 1] && sig[i] <= sig[i + 1])
            .map(|i| (grid[i - 1], grid[i + 1]))
            .collect();
        let refined = brackets
            .par_iter()
            .map(|&(a, b)| self.golden(a, b))
            .collect::<Result<Vec<_>>>()?;
        let mut ks: Vec<f64> = refined
            .into_iter()
            .filter(|&(_, s)| s < MULTIPLICITY_THRESHOLD)
            .map(|(k, _)| k)
            .collect();
        ks.sort_by(f64::total_cmp);
        ks.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * x.abs().max(1.0));
        ks.par_iter()
            .map(|&k| {
                let lambda = lambda_of_k(k, self.m);
                let s = secular_matrix(self.problem, C64::new(lambda, 0.0), &self.opts)?;
                Ok((k, s.nullity(MULTIPLICITY_THRESHOLD).max(1)))
            })
            .collect()
    }

    /// Half-height of the certificate rectangle over `[ka, kb]`.
    fn rectangle_height(&self, ka: f64, kb: f64) -> f64 {
        let h = 1.0 / (4.0 * self.c_w);
        let kmax = ka.abs().max(kb.abs());
        self.m as f64 * kmax.powi(self.m as i32 - 1) * h + h.powi(self.m as i32)
    }

    /// Winding number of the secular determinant around `[a, b] x [-delta, delta]`.
    fn winding(&self, a: f64, b: f64, delta: f64, expected: f64) -> Result<f64> {
        let corners = [
            C64::new(a, -delta),
            C64::new(b, -delta),
            C64::new(b, delta),
            C64::new(a, delta),
        ];
        let horizontal = 8 + (8.0 * expected.max(0.0)).ceil() as usize;
        let mut total = 0.0;
        for side in 0..4 {
            let z0 = corners[side];
            let z1 = corners[(side + 1) % 4];
            let n = if side % 2 == 0 { horizontal } else { 8 };
            let ts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let phases = ts
                .par_iter()
                .map(|&t| self.phase(z0 + (z1 - z0) * t))
                .collect::<Result<Vec<_>>>()?;
            for i in 0..n {
                total += self.arc(z0, z1, ts[i], ts[i + 1], phases[i], phases[i + 1], 0)?;
            }
        }
        Ok(total / (2.0 * std::f64::consts::PI))
    }

    #[allow(clippy::too_many_arguments)]
    fn arc(
        &self,
        z0: C64,
        z1: C64,
        t0: f64,
        t1: f64,
        p0: C64,
        p1: C64,
        depth: usize,
    ) -> Result<f64> {
        let step = (p1 / p0).arg();
        if step.abs() <= std::f64::consts::FRAC_PI_4 || depth >= 24 {
            return Ok(step);
        }
        let tm = 0.5 * (t0 + t1);
        let pm = self.phase(z0 + (z1 - z0) * tm)?;
        Ok(self.arc(z0, z1, t0, tm, p0, pm, depth + 1)?
            + self.arc(z0, z1, tm, t1, pm, p1, depth + 1)?)
    }

    /// Contour count over `[ka, kb]` compared against the roots found there.
    fn certify(&self, ka: f64, kb: f64, found: usize) -> Result<(i64, bool)> {
        let a = lambda_of_k(ka, self.m);
        let b = lambda_of_k(kb, self.m);
        let delta = self.rectangle_height(ka, kb);
        let w = self.winding(a, b, delta, self.c_w * (kb - ka))?;
        let count = w.round() as i64;
        let clean = (w - w.round()).abs() < 0.1;
        Ok((count, clean && count == found as i64))
    }
}

/// Boundaries between consecutive root groups, at the grid point where the
/// normalized smallest singular value is largest.
fn chunk_boundaries(
    grid: &[f64],
    sig: &[f64],
    roots: &[(f64, usize)],
    per_chunk: usize,
) -> Vec<f64> {
    let mut out = vec![grid[0]];
    let mut i = per_chunk;
    while i < roots.len() {
        let lo = roots[i - 1].0;
        let hi = roots[i].0;
        let best = grid
            .iter()
            .zip(sig)
            .filter(|(k, _)| **k > lo && **k < hi)
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(k, _)| *k)
            .unwrap_or(0.5 * (lo + hi));
        out.push(best);
        i += per_chunk;
    }
    out
}

fn counted(roots: &[(f64, usize)], ka: f64, kb: f64) -> usize {
    roots
        .iter()
        .filter(|(k, _)| *k >= ka && *k <= kb)
        .map(|(_, q)| q)
        .sum()
}

/// Eigenvalues of a symmetric, elliptic problem in `[lambda_lo, lambda_hi]`.
/// The parameters a sweep of `problem` with `opts` records, known before sweeping.
pub fn solver_params(problem: &BoundaryContactProblem, opts: &SolverOptions) -> SolverParams {
    SolverParams {
        order: problem.order(),
        weyl_coefficient: weyl_coefficient(problem),
        tail_constant: (problem.graph.vertices.len() + problem.graph.edges.len() + 2) as f64,
        total_length: problem.graph.total_length(),
        min_length: problem.graph.min_length(),
        lambda_lo: opts.lambda_lo.unwrap_or_else(|| default_lambda_lo(problem)),
        oversample: opts.oversample,
        max_refinements: opts.max_refinements,
        force_numeric: opts.force_numeric,
    }
}

pub fn eigenvalues(
    problem: &BoundaryContactProblem,
    lambda_hi: f64,
    opts: &SolverOptions,
) -> Result<Spectrum> {
    problem.ensure_valid()?;
    if !lambda_hi.is_finite() {
        return Err(Error::Invalid("lambda_hi must be finite".into()));
    }
    if !self_adjointness_report(problem).symmetric {
        return Err(Error::NotSymmetric);
    }
    let verdict = ellipticity::check(problem, Sampling::default())?;
    if !verdict.elliptic {
        return Err(Error::NotElliptic(format!(
            "min normalized sigma {:.3e}",
            verdict.min_sigma()
        )));
    }

    let m = problem.order();
    let lambda_lo = opts.lambda_lo.unwrap_or_else(|| default_lambda_lo(problem));
    if lambda_lo >= lambda_hi {
        return Err(Error::Invalid(format!(
            "lambda_lo = {lambda_lo} is not below lambda_hi = {lambda_hi}"
        )));
    }
    let c_w = weyl_coefficient(problem);
    let sweeper = Sweeper {
        problem,
        opts: *opts,
        m,
        c_w,
    };
    let dk = 1.0 / (c_w * opts.oversample.max(2) as f64);
    let k_lo = k_of_lambda(lambda_lo, m);
    let k_hi = k_of_lambda(lambda_hi, m);
    let k_end = k_hi + 4.0 * dk;

    let grid = sweeper.grid(k_lo, k_end, dk);
    let sig = grid
        .par_iter()
        .map(|&k| sweeper.sigma_hat(k))
        .collect::<Result<Vec<_>>>()?;
    let mut roots = sweeper.roots(&grid, &sig)?;

    // The last chunk ends between the last root inside the window and the next one.
    let inside = roots.iter().filter(|(k, _)| *k <= k_hi).count();
    let next = roots.get(inside).map(|r| r.0).unwrap_or(f64::INFINITY);
    let last_in = if inside > 0 {
        roots[inside - 1].0
    } else {
        k_lo
    };
    let k_stop = grid
        .iter()
        .zip(&sig)
        .filter(|(k, _)| **k >= k_hi.max(last_in) && **k < next)
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, _)| *k)
        .unwrap_or(k_end);
    roots.truncate(inside);

    let mut bounds = chunk_boundaries(&grid, &sig, &roots, 8);
    bounds.push(k_stop);
    let chunks: Vec<(f64, f64)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();

    let results = chunks
        .par_iter()
        .map(
            |&(ka, kb)| -> Result<(Vec<(f64, usize)>, CertificateEntry)> {
                let mut local: Vec<(f64, usize)> = roots
                    .iter()
                    .copied()
                    .filter(|(k, _)| *k >= ka && *k <= kb)
                    .collect();
                let mut refinements = 0;
                loop {
                    let found = counted(&local, ka, kb);
                    let (count, ok) = sweeper.certify(ka, kb, found)?;
                    if ok {
                        let entry = CertificateEntry {
                            a: lambda_of_k(ka, m),
                            b: lambda_of_k(kb, m),
                            contour_count: count,
                            found,
                            refinements,
                        };
                        return Ok((local, entry));
                    }
                    if refinements >= opts.max_refinements {
                        return Err(Error::MissedEigenvalue {
                            a: lambda_of_k(ka, m),
                            b: lambda_of_k(kb, m),
                        });
                    }
                    refinements += 1;
                    log::debug!(
                        "certificate mismatch on k in [{ka}, {kb}], refinement {refinements}"
                    );
                    let fine = dk / f64::powi(2.0, refinements as i32);
                    let g = sweeper.grid(ka, kb, fine);
                    let s = g
                        .par_iter()
                        .map(|&k| sweeper.sigma_hat(k))
                        .collect::<Result<Vec<_>>>()?;
                    local = sweeper.roots(&g, &s)?;
                }
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let mut eigen = Vec::new();
    let mut certificate = Vec::new();
    for (local, entry) in results {
        eigen.extend(
            local
                .into_iter()
                .filter(|(k, _)| *k <= k_hi)
                .map(|(k, q)| Eigenvalue {
                    lambda: lambda_of_k(k, m),
                    multiplicity: q,
                }),
        );
        certificate.push(entry);
    }
    eigen.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));

    Ok(Spectrum {
        digest: problem.canonical_hash(),
        eigenvalues: eigen,
        window: (lambda_lo, lambda_hi),
        certificate,
        params: solver_params(problem, opts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use std::f64::consts::PI;

    fn spectrum(p: &BoundaryContactProblem, hi: f64) -> Spectrum {
        eigenvalues(p, hi, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn dirichlet_interval_squares() {
        let s = spectrum(&builtins::interval_dirichlet(), 400.5);
        assert_eq!(s.eigenvalues.len(), 20);
        for (n, e) in s.eigenvalues.iter().enumerate() {
            let want = ((n + 1) * (n + 1)) as f64;
            assert!((e.lambda - want).abs() < 1e-8, "{} vs {want}", e.lambda);
            assert_eq!(e.multiplicity, 1);
        }
        assert!(s.certificate_consistent());
    }

    #[test]
    fn kirchhoff_star_multiplicities() {
        let s = spectrum(&builtins::star3_kirchhoff(), (4.2 * PI).powi(2));
        let want: Vec<(f64, usize)> = (1..=8)
            .map(|j| {
                let k = j as f64 * PI / 2.0;
                (k * k, if j % 2 == 0 { 2 } else { 1 })
            })
            .collect();
        assert_eq!(s.eigenvalues.len(), want.len());
        for (e, (l, q)) in s.eigenvalues.iter().zip(want) {
            assert!(
                (e.lambda - l).abs() < 1e-8 * l.max(1.0),
                "{} vs {l}",
                e.lambda
            );
            assert_eq!(e.multiplicity, q);
        }
        assert!(s.certificate_consistent());
    }

    #[test]
    fn glued_circle() {
        let s = spectrum(&builtins::circle_glued(), 100.0);
        assert!(s.eigenvalues[0].lambda.abs() < 1e-8);
        assert_eq!(s.eigenvalues[0].multiplicity, 1);
        for (n, e) in s.eigenvalues.iter().skip(1).enumerate() {
            let want = ((n + 1) as f64 * PI).powi(2);
            assert!((e.lambda - want).abs() < 1e-8 * want);
            assert_eq!(e.multiplicity, 2);
        }
        assert_eq!(s.eigenvalues.len(), 4);
    }

    #[test]
    fn clamped_beam_matches_transcendental_roots() {
        let s = spectrum(&builtins::beam_clamped(), 1e5);
        let roots = builtins::clamped_beam_roots(s.eigenvalues.len());
        assert!(s.eigenvalues.len() >= 5);
        for (e, beta) in s.eigenvalues.iter().zip(roots) {
            let want = beta.powi(4);
            assert!(
                (e.lambda - want).abs() < 1e-8 * want,
                "{} vs {want}",
                e.lambda
            );
        }
    }

    #[test]
    fn non_symmetric_is_rejected() {
        let mut p = builtins::interval_dirichlet();
        p.operators[0].coeffs[1] = crate::graph::MatPoly::scalar(C64::new(1.0, 0.0));
        assert!(matches!(
            eigenvalues(&p, 10.0, &SolverOptions::default()),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn delta_star_has_a_negative_eigenvalue_for_attractive_coupling() {
        let mut p = builtins::star3_kirchhoff();
        p.couplings[0] = builtins::kirchhoff(3, -6.0);
        let s = spectrum(&p, 20.0);
        assert!(s.eigenvalues[0].lambda < 0.0);
        assert!(s.certificate_consistent());
    }

    #[test]
    fn csv_round_trip() {
        let s = spectrum(&builtins::interval_dirichlet(), 30.0);
        let csv = s.to_csv();
        assert!(csv.starts_with("k,lambda,multiplicity\n1,"));
        assert_eq!(Spectrum::eigenvalues_from_csv(&csv).unwrap(), s.eigenvalues);
    }

    #[test]
    fn weyl_coefficients() {
        assert!((weyl_coefficient(&builtins::star3_kirchhoff()) - 3.0 / PI).abs() < 1e-14);
        assert!((weyl_coefficient(&builtins::beam_clamped()) - 1.0 / PI).abs() < 1e-14);
    }
}
