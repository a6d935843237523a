//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the report is printed whether or not output is
//! captured. The process fails when a criterion outside `KNOWN_FAILURES`
//! fails.

use std::f64::consts::PI;
use std::time::Instant;

use bcp_core::asymptotics::{
    default_series, fit_heat_invariants, fit_resolvent_coeffs, heat_series, log_grid,
    resolvent_trace, weyl_fit, zeta, Localizer,
};
use bcp_core::builtins;
use bcp_core::ellipticity::{self, characteristic_exponents, lopatinsky_matrix, Sampling};
use bcp_core::graph::{EndpointJet, MatPoly};
use bcp_core::numeric::{CMat, C64};
use bcp_core::spectra::{
    eigenvalues, resolvent_norm, solve_resolvent, EdgeFunction, SolverOptions, Spectrum,
};
use bcp_core::BoundaryContactProblem;
use statrs::function::gamma::gamma;

/// Criterion 3 asks for `|lambda| ||R(lambda)|| = sqrt 2` on the ray at 3pi/4.
/// For a self-adjoint operator the norm is one over the distance to the
/// spectrum, and from that ray the nearest eigenvalue is the lowest one, so
/// the product tends to 1.
const KNOWN_FAILURES: &[usize] = &[3];

struct Report {
    lines: Vec<String>,
    ok: bool,
}

impl Report {
    fn new() -> Self {
        Report {
            lines: Vec::new(),
            ok: true,
        }
    }

    /// Records one check; the criterion passes when all its checks do.
    fn check(&mut self, pass: bool, what: String) {
        if !pass {
            self.ok = false;
        }
        self.lines
            .push(format!("    [{}] {what}", if pass { "ok" } else { "x" }));
    }

    fn abort(&mut self, e: String) {
        self.ok = false;
        self.lines.push(format!("    [x] {e}"));
    }
}

fn spectrum(p: &BoundaryContactProblem, hi: f64) -> Result<Spectrum, String> {
    eigenvalues(p, hi, &SolverOptions::default()).map_err(|e| e.to_string())
}

fn builtin(name: &str) -> BoundaryContactProblem {
    builtins::by_name(name).unwrap()
}

fn ellipticity(r: &mut Report) -> Result<(), String> {
    let elliptic = [
        "interval-dirichlet",
        "interval-neumann",
        "star3-kirchhoff",
        "star3-delta",
        "circle-glued",
        "beam-clamped",
    ];
    for name in elliptic {
        let v = ellipticity::check(&builtin(name), Sampling::default()).unwrap();
        r.check(
            v.elliptic && v.min_sigma() > 1e-2,
            format!(
                "{name}: elliptic = {}, min sigma = {:.4e} (> 1e-2)",
                v.elliptic,
                v.min_sigma()
            ),
        );
    }
    let bad = builtin("transmission-bad");
    let v = ellipticity::check(&bad, Sampling::default()).unwrap();
    // Largest normalized sigma over the arc, at the vertex where it is smallest.
    let worst = (0..bad.graph.vertices.len())
        .map(|vertex| {
            bad.sector
                .arc(Sampling::default().n)
                .into_iter()
                .map(|l| {
                    lopatinsky_matrix(&bad, vertex, l)
                        .unwrap()
                        .normalized_sigma()
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    r.check(
        !v.elliptic && worst < 1e-10,
        format!(
            "transmission-bad: elliptic = {}, sigma over the arc <= {worst:.3e} (< 1e-10)",
            v.elliptic
        ),
    );
    let star = builtin("star3-kirchhoff");
    let dets: Vec<f64> = std::iter::once(C64::new(-1.0, 0.0))
        .chain(star.sector.arc(9))
        .map(|l| {
            lopatinsky_matrix(&star, 0, l)
                .unwrap()
                .matrix
                .determinant()
                .norm()
        })
        .collect();
    let err = dets.iter().map(|d| (d - 3.0).abs()).fold(0.0, f64::max);
    r.check(
        err <= 1e-10,
        format!("Kirchhoff d = 3: max ||det| - 3| = {err:.3e} at |lambda| = 1 (<= 1e-10)"),
    );
    Ok(())
}

fn spectra(r: &mut Report) -> Result<(), String> {
    let p = builtin("interval-dirichlet");
    let a = spectrum(&p, 420.0)?;
    let forced = SolverOptions {
        force_numeric: true,
        ..SolverOptions::default()
    };
    let b = eigenvalues(&p, 420.0, &forced).map_err(|e| e.to_string())?;
    for (s, tol, label) in [(&a, 1e-8, "constant-coefficient"), (&b, 1e-6, "numeric")] {
        let err = (0..20)
            .map(|k| {
                let want = ((k + 1) * (k + 1)) as f64;
                s.eigenvalues
                    .get(k)
                    .map_or(f64::INFINITY, |e| (e.lambda - want).abs() / want)
            })
            .fold(0.0, f64::max);
        r.check(
            s.eigenvalues.len() == 20 && err <= tol,
            format!(
                "Dirichlet {label}: {} eigenvalues, max rel error {err:.3e} (<= {tol:e})",
                s.eigenvalues.len()
            ),
        );
    }

    let s = spectrum(&builtin("star3-kirchhoff"), 2e3)?;
    let mut want: Vec<(f64, usize)> = (0..15)
        .map(|n| ((PI / 2.0 + n as f64 * PI).powi(2), 1))
        .chain((1..15).map(|n| ((n as f64 * PI).powi(2), 2)))
        .filter(|w| w.0 <= 2e3)
        .collect();
    want.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ok = s.eigenvalues.len() == want.len()
        && s.eigenvalues
            .iter()
            .zip(&want)
            .all(|(e, w)| e.multiplicity == w.1 && (e.lambda - w.0).abs() <= 1e-8 * w.0);
    r.check(
        ok,
        format!(
            "star3: {} eigenvalues with multiplicities 1/2 alternating as in the closed form",
            want.len()
        ),
    );

    let s = spectrum(&builtin("circle-glued"), 2e3)?;
    let want: Vec<(f64, usize)> = std::iter::once((0.0, 1))
        .chain((1..15).map(|n| ((n as f64 * PI).powi(2), 2)))
        .filter(|w| w.0 <= 2e3)
        .collect();
    let ok = s.eigenvalues.len() == want.len()
        && s.eigenvalues
            .iter()
            .zip(&want)
            .all(|(e, w)| e.multiplicity == w.1 && (e.lambda - w.0).abs() <= 1e-8 * w.0.max(1.0));
    r.check(
        ok,
        format!(
            "circle: {{0}} and {} double eigenvalues (n pi)^2",
            want.len() - 1
        ),
    );

    for (name, p) in builtins::all() {
        if name == "transmission-bad" {
            continue;
        }
        for hi in if p.order() == 4 {
            [1e5, 1e7]
        } else {
            [3e2, 3e3]
        } {
            let s = spectrum(&p, hi)?;
            let exact = s.certificate_consistent()
                && s.certificate
                    .iter()
                    .all(|c| c.contour_count == c.found as i64);
            r.check(exact, format!("{name}: certificate exact on [.., {hi:e}]"));
        }
    }
    Ok(())
}

fn resolvent_norms(r: &mut Report) -> Result<(), String> {
    let s = spectrum(&builtin("interval-dirichlet"), 1e7)?;
    let dir = C64::from_polar(1.0, 0.75 * PI);
    for modulus in [1e2, 1e3, 1e4, 1e5, 1e6] {
        let n = resolvent_norm(&s, dir * modulus).map_err(|e| e.to_string())?;
        let scaled = modulus * n;
        r.check(
            (scaled - 2f64.sqrt()).abs() <= 0.01,
            format!("|lambda| = {modulus:e}: |lambda| ||R|| = {scaled:.6} (target sqrt 2 +- 0.01)"),
        );
    }
    Ok(())
}

fn coth_oracle(s: f64) -> f64 {
    let q = s.sqrt();
    PI / (2.0 * q * (PI * q).tanh()) - 1.0 / (2.0 * s)
}

fn resolvent_traces(r: &mut Report) -> Result<(), String> {
    let s = spectrum(&builtin("interval-dirichlet"), 1e6)?;
    for x in [1.0, 10.0, 100.0] {
        let t = resolvent_trace(&s, C64::new(-x, 0.0), 1, None).map_err(|e| e.to_string())?;
        let err = (t.value[0] - coth_oracle(x)).abs().max(t.value[1].abs());
        r.check(
            err <= 1e-8,
            format!("N = 1 at lambda = -{x}: error {err:.3e} (<= 1e-8)"),
        );
    }
    let fit = fit_resolvent_coeffs(&s, PI, 1, 4, None).map_err(|e| e.to_string())?;
    r.check(
        (fit.real(0) - PI / 2.0).abs() <= 1e-3,
        format!("c0 = {:.6} (pi/2 +- 1e-3)", fit.real(0)),
    );
    r.check(
        (fit.real(1) + 0.5).abs() <= 1e-3,
        format!("c1 = {:.6} (-1/2 +- 1e-3)", fit.real(1)),
    );
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for n in [1u32, 2, 3] {
        for l in [-5.0, -50.0] {
            let at = |x: f64, k| {
                resolvent_trace(&s, C64::new(x, 0.0), k, None)
                    .unwrap()
                    .value[0]
            };
            let fd = (at(l + h, n) - at(l - h, n)) / (2.0 * h);
            let exact = at(l, n + 1) * n as f64;
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
    }
    r.check(
        worst <= 1e-6,
        format!("N -> N+1 derivative consistency: {worst:.3e} relative (<= 1e-6)"),
    );
    Ok(())
}

fn heat_invariants(r: &mut Report) -> Result<(), String> {
    for (name, p) in builtins::all() {
        let o = builtins::oracle(name).unwrap();
        if !o.positive {
            continue;
        }
        let hi = if p.order() == 4 { 3e9 } else { 1e5 };
        let s = spectrum(&p, hi)?;
        let series = default_series(&s, 40, None).map_err(|e| e.to_string())?;
        let fit = fit_heat_invariants(&series, 4).map_err(|e| e.to_string())?;
        // Order four: the leading coefficient is L Gamma(5/4) / pi.
        let want = if p.order() == 2 {
            o.total_length / (4.0 * PI).sqrt()
        } else {
            o.total_length * gamma(1.25) / PI
        };
        r.check(
            (fit.real(0) - want).abs() <= 1e-3,
            format!(
                "{name}: alpha0 = {:.6}, expected {want:.6} (+- 1e-3)",
                fit.real(0)
            ),
        );
    }
    for (name, want) in [
        ("interval-dirichlet", -0.5),
        ("interval-neumann", 0.5),
        ("star3-kirchhoff", -1.0),
    ] {
        let s = spectrum(&builtin(name), 1e5)?;
        let fit = fit_heat_invariants(&default_series(&s, 40, None).map_err(|e| e.to_string())?, 4)
            .map_err(|e| e.to_string())?;
        r.check(
            (fit.real(1) - want).abs() <= 1e-2,
            format!(
                "{name}: alpha1 = {:.6}, expected {want} (+- 1e-2)",
                fit.real(1)
            ),
        );
    }
    let p = builtins::split_interval_dirichlet();
    let s = spectrum(&p, 1e4)?;
    let loc = Localizer::new(&p, &s, &[1.0, 0.0]).map_err(|e| e.to_string())?;
    let ts = log_grid(3e-3, 0.3, 20);
    let full = heat_series(&s, &ts, None).map_err(|e| e.to_string())?;
    let half = heat_series(&s, &ts, Some(&loc)).map_err(|e| e.to_string())?;
    let worst = full
        .values
        .iter()
        .zip(&half.values)
        .map(|(a, b)| (b - 0.5 * a).abs() / a)
        .fold(0.0, f64::max);
    r.check(
        worst <= 1e-8,
        format!("half-interval phi: max relative gap {worst:.3e} (<= 1e-8)"),
    );
    Ok(())
}

fn zeta_values(r: &mut Report) -> Result<(), String> {
    let s = spectrum(&builtin("interval-dirichlet"), 1e5)?;
    let fit = fit_heat_invariants(&default_series(&s, 40, None).map_err(|e| e.to_string())?, 4)
        .map_err(|e| e.to_string())?;
    let z = zeta(&s, &fit, &[2.0, -1.0], None).map_err(|e| e.to_string())?;
    r.check(
        (z.at_zero + 0.5).abs() <= 1e-4,
        format!("Dirichlet zeta(0) = {:.8} (-1/2 +- 1e-4)", z.at_zero),
    );
    let (pole, residue) = z.residues[0];
    r.check(
        pole == 0.5 && (residue - 0.5).abs() <= 1e-3,
        format!("residue at s = {pole}: {residue:.8} (1/2 +- 1e-3)"),
    );
    let z2 = z.values[0].value.unwrap_or(f64::NAN);
    r.check(
        (z2 - PI.powi(4) / 90.0).abs() <= 1e-6,
        format!(
            "zeta(2) = {z2:.10}, pi^4/90 = {:.10} (+- 1e-6)",
            PI.powi(4) / 90.0
        ),
    );
    let zm1 = z.values[1].value.unwrap_or(f64::NAN);
    r.check(
        zm1.abs() <= 1e-3,
        format!("zeta(-1) = {zm1:.3e} (0 +- 1e-3)"),
    );

    let s = spectrum(&builtin("star3-kirchhoff"), 1e5)?;
    let fit = fit_heat_invariants(&default_series(&s, 40, None).map_err(|e| e.to_string())?, 4)
        .map_err(|e| e.to_string())?;
    let z = zeta(&s, &fit, &[1e-6], None).map_err(|e| e.to_string())?;
    let near = z.values[0].value.unwrap_or(f64::NAN);
    r.check(
        (near - fit.real(1)).abs() <= 1e-3 && (z.at_zero - fit.real(1)).abs() <= 1e-3,
        format!(
            "star3: zeta(1e-6) = {near:.6}, zeta(0) = {:.6}, alpha1 = {:.6} (+- 1e-3)",
            z.at_zero,
            fit.real(1)
        ),
    );
    Ok(())
}

fn weyl(r: &mut Report) -> Result<(), String> {
    for (name, p) in builtins::all() {
        if p.order() != 2 || !builtins::oracle(name).unwrap().elliptic {
            continue;
        }
        // About 2000 eigenvalues: N(lambda) ~ L sqrt(lambda) / pi.
        let hi = (2000.0 * PI / p.graph.total_length()).powi(2);
        let s = spectrum(&p, hi)?;
        let w = weyl_fit(&s).map_err(|e| e.to_string())?;
        r.check(
            (w.exponent - 2.0).abs() <= 0.01,
            format!("{name}: exponent {:.5} (2 +- 0.01)", w.exponent),
        );
        let want = match name {
            "interval-dirichlet" => Some(1.0),
            "star3-kirchhoff" => Some((PI / 3.0).powi(2)),
            "circle-glued" => Some((PI / 2.0).powi(2)),
            _ => None,
        };
        if let Some(c) = want {
            let rel = (w.constant - c).abs() / c;
            r.check(
                rel <= 0.02,
                format!(
                    "{name}: constant {:.5}, expected {c:.5} (2%: {rel:.2e})",
                    w.constant
                ),
            );
        }
    }
    Ok(())
}

fn gauge(n: usize, seed: f64) -> CMat {
    // Diagonally dominant, hence invertible.
    CMat::from_fn(n, n, |i, j| {
        let x = (seed + 1.3 * i as f64 + 0.7 * j as f64).sin();
        if i == j {
            C64::new(n as f64 + 1.0, x)
        } else {
            C64::new(x, 0.5 * x)
        }
    })
}

fn properties(r: &mut Report) -> Result<(), String> {
    for (name, hi) in [
        ("star3-kirchhoff", 400.0),
        ("circle-glued", 400.0),
        ("beam-clamped", 1e6),
    ] {
        let p = builtin(name);
        let gauges: Vec<CMat> = p
            .couplings
            .iter()
            .enumerate()
            .map(|(v, c)| gauge(c.rows, v as f64))
            .collect();
        let a = spectrum(&p, hi)?;
        let b = spectrum(&p.with_recombined_rows(&gauges), hi)?;
        let ok = a.eigenvalues.len() == b.eigenvalues.len()
            && a.eigenvalues.iter().zip(&b.eigenvalues).all(|(x, y)| {
                x.multiplicity == y.multiplicity
                    && (x.lambda - y.lambda).abs() <= 1e-9 * x.lambda.abs().max(1.0)
            });
        r.check(
            ok,
            format!("{name}: spectrum invariant under row recombination (1e-9)"),
        );
    }

    let mut worst: f64 = 0.0;
    for (m, sign) in [(2, -1.0), (4, 1.0)] {
        let a = CMat::from_element(1, 1, C64::new(sign, 0.0));
        for arg in [2.2, 3.1, 4.0] {
            let lambda = C64::from_polar(3.0, arg);
            let t: f64 = 2.5;
            let base = characteristic_exponents(&a, m, lambda, true)
                .unwrap()
                .all_roots();
            let scaled = characteristic_exponents(&a, m, lambda * t.powi(m as i32), true)
                .unwrap()
                .all_roots();
            for mu in &base {
                let nearest = scaled
                    .iter()
                    .map(|nu| (nu - mu * t).norm())
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(nearest / (mu * t).norm().max(1.0));
            }
        }
    }
    r.check(
        worst <= 1e-10,
        format!("exponent homogeneity: {worst:.3e} (<= 1e-10)"),
    );

    let mut identical = true;
    for (_, p) in builtins::all() {
        let mut q = p.clone();
        for op in &mut q.operators {
            for k in 0..op.order {
                let v = C64::new(0.7 * (k as f64 + 1.0), -0.3);
                op.coeffs[k] = MatPoly::constant(CMat::from_element(op.rank, op.rank, v));
            }
        }
        let a = ellipticity::check(&p, Sampling::default()).unwrap();
        let b = ellipticity::check(&q, Sampling::default()).unwrap();
        identical &= a.elliptic == b.elliptic
            && a.vertices.iter().zip(&b.vertices).all(|(x, y)| {
                x.min_sigma.to_bits() == y.min_sigma.to_bits() && x.stable_counts == y.stable_counts
            });
        for lambda in p.sector.arc(16) {
            let m = p.order();
            let ea =
                characteristic_exponents(&p.operators[0].leading(0.0), m, lambda, true).unwrap();
            let eb =
                characteristic_exponents(&q.operators[0].leading(0.0), m, lambda, true).unwrap();
            identical &= ea == eb;
        }
    }
    r.check(
        identical,
        "lower-order coefficients leave verdicts and exponents bit-identical".into(),
    );

    let mut p = builtin("star3-kirchhoff");
    let center = p
        .graph
        .vertices
        .iter()
        .position(|v| v.degree() == 3)
        .unwrap();
    for (i, ep) in p.graph.vertices[center].endpoints.iter_mut().enumerate() {
        ep.weight = 0.5 + i as f64;
    }
    let eps = p.graph.vertices[center].endpoints.clone();
    let jets: Vec<EndpointJet> = eps
        .iter()
        .enumerate()
        .map(|(i, ep)| EndpointJet {
            edge: ep.edge,
            side: ep.side,
            derivatives: CMat::from_fn(2, 1, |k, _| {
                C64::new(1.0 + i as f64 - k as f64, 0.3 * k as f64)
            }),
        })
        .collect();
    let fiber = p.push_forward(center, &jets).unwrap();
    let values: Vec<C64> = (0..fiber.ncols()).map(|c| fiber[(0, c)]).collect();
    let direct: f64 = jets
        .iter()
        .zip(&eps)
        .map(|(j, ep)| ep.weight * j.derivatives[(0, 0)].norm_sqr())
        .sum();
    let pushed = p.fiber_norm_sq(center, &values).unwrap();
    r.check(
        (pushed - direct).abs() <= 1e-12 * direct,
        format!("push-forward norm: {pushed:.15} vs {direct:.15}"),
    );

    let mut worst: f64 = 0.0;
    for (name, p) in builtins::all() {
        if name == "transmission-bad" {
            continue;
        }
        let f: Vec<EdgeFunction> = p
            .graph
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                EdgeFunction::sample(edge.length, 128, p.rank(), |x| {
                    vec![C64::new(1.0 + e as f64 + 0.3 * x, 0.0); p.rank()]
                })
            })
            .collect();
        for lambda in [
            C64::new(-7.0, 0.0),
            C64::new(3.0, 5.0),
            C64::new(-40.0, -90.0),
        ] {
            let sol = solve_resolvent(&p, lambda, &f).map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max(sol.coupling_residual).max(sol.interior_residual);
        }
    }
    r.check(
        worst <= 1e-8,
        format!("solve_resolvent residuals <= {worst:.3e} (<= 1e-8)"),
    );

    let mut same = true;
    for args in [
        &["spectrum", "star3-delta", "--lambda-max", "900"][..],
        &["heat-fit", "star3-kirchhoff"],
        &["zeta", "interval-dirichlet", "--s", "-1,0.25,2"],
    ] {
        let run = || {
            let mut out = Vec::new();
            let mut err = Vec::new();
            let code = bcp_cli::run(
                std::iter::once("bcp").chain(args.iter().copied()),
                &mut out,
                &mut err,
            );
            (code, out)
        };
        let (ca, a) = run();
        let (cb, b) = run();
        same &= ca == 0 && cb == 0 && a == b;
    }
    r.check(same, "CLI outputs byte-identical across runs".into());
    Ok(())
}

fn main() {
    type Criterion = (usize, &'static str, fn(&mut Report) -> Result<(), String>);
    let criteria: [Criterion; 8] = [
        (1, "ellipticity verdicts", ellipticity),
        (2, "spectra and certificates", spectra),
        (3, "resolvent norm on the ray 3pi/4", resolvent_norms),
        (4, "resolvent trace", resolvent_traces),
        (5, "heat invariants", heat_invariants),
        (6, "zeta values", zeta_values),
        (7, "Weyl law", weyl),
        (8, "property suites", properties),
    ];
    let mut unexpected = Vec::new();
    for (id, title, run) in criteria {
        let start = Instant::now();
        let mut report = Report::new();
        if let Err(e) = run(&mut report) {
            report.abort(e);
        }
        let secs = start.elapsed().as_secs_f64();
        let verdict = if report.ok { "PASS" } else { "FAIL" };
        let known = KNOWN_FAILURES.contains(&id);
        let note = match (report.ok, known) {
            (false, true) => " (known)",
            (true, true) => " (listed as known failure, now passing)",
            _ => "",
        };
        println!("{verdict} criterion {id}: {title} [{secs:.1}s]{note}");
        for line in &report.lines {
            println!("{line}");
        }
        if !report.ok && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
