use std::fs;
use std::io::Write;
use std::path::Path;

use bcp_core::asymptotics::{
    default_series, ensure_positive, fit_heat_invariants, fit_resolvent_coeffs_over, heat_series,
    log_grid, resolvent_fit_start, weyl_fit, zeta, AsymptoticFit, HeatTraceSeries, Localizer,
};
use bcp_core::builtins;
use bcp_core::cache::{CacheStatus, SpectrumCache};
use bcp_core::ellipticity::{self, Sampling};
use bcp_core::format::{emit_problem, fmt_real, parse_problem, SCHEMA_VERSION};
use bcp_core::numeric::C64;
use bcp_core::spectra::{
    eigenvalues, resolvent_norm, solve_resolvent, solver_params, EdgeFunction, SolverOptions,
    Spectrum,
};
use bcp_core::BoundaryContactProblem;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Command, ExamplesAction, Format, OutputArgs, SpectrumArgs};
use crate::Failure;

type Outcome = Result<i32, Failure>;

/// Eigenvalues per window doubling attempted when `--max-eig` is not yet met.
const MAX_EXTENSIONS: usize = 6;
/// Default eigenvalue count for Weyl fits.
const WEYL_DEFAULT_COUNT: usize = 2000;

pub fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Check {
            problem,
            sector_samples,
            sigma_threshold,
            output,
        } => check(&problem, sector_samples, sigma_threshold, &output, out),
        Command::Spectrum { query } => spectrum(&query, out, err),
        Command::Heat { query, t_grid, phi } => {
            heat(&query, t_grid.as_deref(), phi.as_deref(), out, err)
        }
        Command::HeatFit {
            query,
            t_grid,
            terms,
            phi,
        } => heat_fit(&query, t_grid.as_deref(), terms, phi.as_deref(), out, err),
        Command::Zeta {
            query,
            s,
            t_grid,
            terms,
            phi,
        } => zeta_cmd(
            &query,
            &s,
            t_grid.as_deref(),
            terms,
            phi.as_deref(),
            out,
            err,
        ),
        Command::Weyl { query } => weyl(&query, out, err),
        Command::ResolventScan {
            query,
            ray_deg,
            start,
            decades,
            per_decade,
        } => resolvent_scan(&query, ray_deg, start, decades, per_decade, out, err),
        Command::ResolventFit {
            query,
            ray_deg,
            n,
            terms,
            decades,
            phi,
        } => resolvent_fit(&query, ray_deg, n, terms, decades, phi.as_deref(), out, err),
        Command::Solve {
            problem,
            lambda,
            rhs,
            points,
            output,
        } => solve(&problem, &lambda, rhs.as_deref(), points, &output, out),
        Command::Examples { action } => examples(action, out),
    }
}

/// A problem file on disk, or a builtin example by name (with or without `.json`).
fn load_problem(arg: &str) -> Result<BoundaryContactProblem, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{arg}: {e}")))?;
        return parse_problem(&text).map_err(|e| Failure::Usage(format!("{arg}: {e}")));
    }
    let name = arg.strip_suffix(".json").unwrap_or(arg);
    if builtins::NAMES.contains(&name) {
        return Ok(builtins::by_name(name)?);
    }
    Err(Failure::Usage(format!(
        "{arg}: no such file or builtin example"
    )))
}

fn document(kind: &str, body: impl Serialize) -> String {
    let body = serde_json::to_value(body).expect("results serialize");
    let mut doc = serde_json::Map::new();
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    doc.insert("kind".into(), json!(kind));
    match body {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("data".into(), other);
        }
    }
    let mut text =
        serde_json::to_string_pretty(&Value::Object(doc)).expect("json values serialize");
    text.push('\n');
    text
}

/// Writes `text` to `--out` (with each sidecar next to it) or to `out`.
fn deliver(
    output: &OutputArgs,
    text: &str,
    sidecars: &[(&str, String)],
    out: &mut dyn Write,
) -> Result<(), Failure> {
    match &output.out {
        Some(path) => {
            fs::write(path, text)?;
            for (suffix, body) in sidecars {
                let mut name = path.as_os_str().to_owned();
                name.push(format!(".{suffix}"));
                fs::write(Path::new(&name), body)?;
            }
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn format_of(
    output: &OutputArgs,
    default: Format,
    allowed: &[Format],
    command: &str,
) -> Result<Format, Failure> {
    let f = output.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(Failure::Usage(
            format!("{command} does not support --format {f:?}").to_lowercase(),
        ));
    }
    Ok(f)
}

fn certificate_sidecar(s: &Spectrum) -> (&'static str, String) {
    (
        "certificate.json",
        document(
            "certificate",
            json!({
                "digest": s.digest,
                "params_digest": s.params.digest(),
                "params": s.params,
                "window": s.window,
                "consistent": s.certificate_consistent(),
                "entries": s.certificate,
            }),
        ),
    )
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("{what}: '{t}' is not a number")))
        })
        .collect()
}

fn parse_t_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || {
        Failure::Usage(format!(
            "--t-grid '{text}': expected lo:hi:n with 0 < lo < hi and n >= 2"
        ))
    };
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, n))
}

fn solver_options(query: &SpectrumArgs) -> SolverOptions {
    SolverOptions {
        force_numeric: query.force_numeric,
        lambda_lo: query.lambda_lo,
        ..SolverOptions::default()
    }
}

/// `((100 pi / min_length)^m`, enough for the default heat window and zeta continuation.
fn default_lambda_max(p: &BoundaryContactProblem) -> f64 {
    (100.0 * std::f64::consts::PI / p.graph.min_length()).powi(p.order() as i32)
}

fn compute(
    query: &SpectrumArgs,
    problem: &BoundaryContactProblem,
    hi: f64,
    err: &mut dyn Write,
) -> Result<Spectrum, Failure> {
    let opts = solver_options(query);
    match &query.cache_dir {
        Some(dir) => {
            let (s, status) = SpectrumCache::new(dir).spectrum(problem, hi, &opts)?;
            match status {
                CacheStatus::Corrupt(reason) => {
                    writeln!(
                        err,
                        "warning: ignoring cache entry for {}: {reason}; recomputed",
                        s.digest
                    )?;
                }
                other => log::info!("cache: {other:?}"),
            }
            Ok(s)
        }
        None => Ok(eigenvalues(problem, hi, &opts)?),
    }
}

/// The spectrum requested by `--lambda-max` / `--max-eig`, with `default_count`
/// eigenvalues or `default_hi` as the window when neither is given.
fn obtain(
    query: &SpectrumArgs,
    problem: &BoundaryContactProblem,
    default_hi: Option<f64>,
    default_count: Option<usize>,
    err: &mut dyn Write,
) -> Result<Spectrum, Failure> {
    let count = query.max_eig.or(if query.lambda_max.is_none() {
        default_count
    } else {
        None
    });
    let mut hi = match (query.lambda_max, count, default_hi) {
        (Some(h), _, _) => h,
        (None, Some(k), _) => {
            let p = solver_params(problem, &solver_options(query));
            ((k as f64 + p.tail_constant) / p.weyl_coefficient).powi(p.order as i32)
        }
        (None, None, Some(h)) => h,
        (None, None, None) => {
            return Err(Failure::Usage(
                "one of --lambda-max or --max-eig is required".into(),
            ))
        }
    };
    let mut s = compute(query, problem, hi, err)?;
    if let (None, Some(k)) = (query.lambda_max, count) {
        let mut tries = 0;
        while s.total_multiplicity() < k && tries < MAX_EXTENSIONS {
            hi *= 2f64.powi(problem.order() as i32);
            s = compute(query, problem, hi, err)?;
            tries += 1;
        }
    }
    Ok(s)
}

fn localizer(
    problem: &BoundaryContactProblem,
    s: &Spectrum,
    phi: Option<&str>,
) -> Result<Option<Localizer>, Failure> {
    match phi {
        None => Ok(None),
        Some(text) => Ok(Some(Localizer::new(
            problem,
            s,
            &parse_list(text, "--phi")?,
        )?)),
    }
}

fn check(
    problem: &str,
    samples: usize,
    threshold: f64,
    output: &OutputArgs,
    out: &mut dyn Write,
) -> Outcome {
    format_of(output, Format::Json, &[Format::Json], "check")?;
    let p = load_problem(problem)?;
    let verdict = ellipticity::check(
        &p,
        Sampling {
            n: samples,
            threshold,
        },
    )?;
    let mut body = serde_json::to_value(&verdict).expect("verdicts serialize");
    body["digest"] = json!(p.canonical_hash());
    body["min_sigma"] = json!(verdict.min_sigma());
    deliver(output, &document("ellipticity-verdict", body), &[], out)?;
    if verdict.elliptic {
        Ok(0)
    } else {
        Err(Failure::Domain(format!(
            "problem is not elliptic in its sector (min normalized sigma {:.3e})",
            verdict.min_sigma()
        )))
    }
}

fn spectrum(query: &SpectrumArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let format = format_of(
        &query.output,
        Format::Csv,
        &[Format::Csv, Format::Json],
        "spectrum",
    )?;
    let p = load_problem(&query.problem)?;
    let mut s = obtain(query, &p, None, None, err)?;
    if let Some(k) = query.max_eig {
        let mut seen = 0;
        s.eigenvalues.retain(|e| {
            let keep = seen < k;
            seen += e.multiplicity;
            keep
        });
    }
    let text = match format {
        Format::Csv => s.to_csv(),
        Format::Json => document("spectrum", &s),
    };
    deliver(&query.output, &text, &[certificate_sidecar(&s)], out)?;
    Ok(0)
}

fn series(
    s: &Spectrum,
    t_grid: Option<&str>,
    loc: Option<&Localizer>,
) -> Result<HeatTraceSeries, Failure> {
    Ok(match t_grid {
        Some(g) => heat_series(s, &parse_t_grid(g)?, loc)?,
        None => default_series(s, 40, loc)?,
    })
}

fn heat(
    query: &SpectrumArgs,
    t_grid: Option<&str>,
    phi: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let format = format_of(
        &query.output,
        Format::Csv,
        &[Format::Csv, Format::Json],
        "heat",
    )?;
    let p = load_problem(&query.problem)?;
    let s = obtain(query, &p, Some(default_lambda_max(&p)), None, err)?;
    let loc = localizer(&p, &s, phi)?;
    let h = series(&s, t_grid, loc.as_ref())?;
    if h.negative_modes {
        writeln!(err, "warning: the spectrum has negative eigenvalues")?;
    }
    let text = match format {
        Format::Csv => h.to_csv(),
        Format::Json => document("heat-trace", &h),
    };
    deliver(&query.output, &text, &[certificate_sidecar(&s)], out)?;
    Ok(0)
}

fn fit_document(kind: &str, fit: &AsymptoticFit, extra: Value) -> String {
    let mut body = serde_json::to_value(fit).expect("fits serialize");
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    document(kind, body)
}

fn heat_fit(
    query: &SpectrumArgs,
    t_grid: Option<&str>,
    terms: usize,
    phi: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    format_of(&query.output, Format::Json, &[Format::Json], "heat-fit")?;
    let p = load_problem(&query.problem)?;
    let s = obtain(query, &p, Some(default_lambda_max(&p)), None, err)?;
    let loc = localizer(&p, &s, phi)?;
    let fit = fit_heat_invariants(&series(&s, t_grid, loc.as_ref())?, terms)?;
    let text = fit_document(
        "heat-fit",
        &fit,
        json!({ "order": s.params.order, "phi": loc.map(|l| l.phi) }),
    );
    deliver(&query.output, &text, &[certificate_sidecar(&s)], out)?;
    Ok(0)
}

fn zeta_cmd(
    query: &SpectrumArgs,
    s_list: &str,
    t_grid: Option<&str>,
    terms: usize,
    phi: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let format = format_of(
        &query.output,
        Format::Csv,
        &[Format::Csv, Format::Json],
        "zeta",
    )?;
    let args = parse_list(s_list, "--s")?;
    let p = load_problem(&query.problem)?;
    let s = obtain(query, &p, Some(default_lambda_max(&p)), None, err)?;
    ensure_positive(&s)?;
    let loc = localizer(&p, &s, phi)?;
    let fit = fit_heat_invariants(&series(&s, t_grid, loc.as_ref())?, terms)?;
    let report = zeta(&s, &fit, &args, loc.as_ref())?;
    let text = match format {
        Format::Csv => {
            let mut t = String::from("s,value,tail_bound\n");
            for v in &report.values {
                match v.value {
                    Some(x) => t.push_str(&format!(
                        "{},{},{}\n",
                        fmt_real(v.s),
                        fmt_real(x),
                        fmt_real(v.tail_bound)
                    )),
                    None => t.push_str(&format!("{},,\n", fmt_real(v.s))),
                }
            }
            t
        }
        Format::Json => document("zeta", json!({ "report": report, "heat_fit": fit })),
    };
    deliver(&query.output, &text, &[certificate_sidecar(&s)], out)?;
    Ok(0)
}

fn weyl(query: &SpectrumArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    format_of(&query.output, Format::Json, &[Format::Json], "weyl")?;
    let p = load_problem(&query.problem)?;
    let s = obtain(query, &p, None, Some(WEYL_DEFAULT_COUNT), err)?;
    let fit = weyl_fit(&s)?;
    deliver(
        &query.output,
        &document("weyl-fit", fit),
        &[certificate_sidecar(&s)],
        out,
    )?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn resolvent_scan(
    query: &SpectrumArgs,
    ray_deg: f64,
    start: f64,
    decades: f64,
    per_decade: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let format = format_of(
        &query.output,
        Format::Csv,
        &[Format::Csv, Format::Json],
        "resolvent-scan",
    )?;
    if !(start > 0.0 && decades >= 0.0 && per_decade >= 1) {
        return Err(Failure::Usage(
            "resolvent-scan needs --start > 0, --decades >= 0, --per-decade >= 1".into(),
        ));
    }
    let p = load_problem(&query.problem)?;
    let s = obtain(query, &p, Some(default_lambda_max(&p)), None, err)?;
    let dir = C64::from_polar(1.0, ray_deg.to_radians());
    let steps = (decades * per_decade as f64).round() as usize;
    let mut rows = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let r = start * 10f64.powf(i as f64 / per_decade as f64);
        let norm = resolvent_norm(&s, dir * r)?;
        rows.push((r, norm));
    }
    let text = match format {
        Format::Csv => {
            let mut t = String::from("abs_lambda,norm,scaled_norm\n");
            for (r, n) in &rows {
                t.push_str(&format!(
                    "{},{},{}\n",
                    fmt_real(*r),
                    fmt_real(*n),
                    fmt_real(r * n)
                ));
            }
            t
        }
        Format::Json => document(
            "resolvent-scan",
            json!({
                "ray_deg": ray_deg,
                "rows": rows.iter().map(|(r, n)| json!({"abs_lambda": r, "norm": n, "scaled_norm": r * n})).collect::<Vec<_>>(),
            }),
        ),
    };
    deliver(&query.output, &text, &[certificate_sidecar(&s)], out)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn resolvent_fit(
    query: &SpectrumArgs,
    ray_deg: f64,
    n: u32,
    terms: usize,
    decades: f64,
    phi: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    format_of(
        &query.output,
        Format::Json,
        &[Format::Json],
        "resolvent-fit",
    )?;
    let p = load_problem(&query.problem)?;
    // The fit samples up to s_hi and needs the window four times beyond it.
    let s_hi = (12.5 / p.graph.min_length()).powi(p.order() as i32) * 10f64.powf(decades);
    let s = obtain(query, &p, Some(4.01 * s_hi), None, err)?;
    let loc = localizer(&p, &s, phi)?;
    let start = resolvent_fit_start(&s);
    let window = (start, start * 10f64.powf(decades));
    let fit = fit_resolvent_coeffs_over(&s, ray_deg.to_radians(), n, terms, window, loc.as_ref())?;
    let text = fit_document(
        "resolvent-fit",
        &fit,
        json!({ "ray_deg": ray_deg, "N": n, "order": s.params.order, "phi": loc.map(|l| l.phi) }),
    );
    deliver(&query.output, &text, &[certificate_sidecar(&s)], out)?;
    Ok(0)
}

fn solve(
    problem: &str,
    lambda: &str,
    rhs: Option<&str>,
    points: usize,
    output: &OutputArgs,
    out: &mut dyn Write,
) -> Outcome {
    let format = format_of(output, Format::Csv, &[Format::Csv, Format::Json], "solve")?;
    let l = parse_list(lambda, "--lambda")?;
    let lambda = match l.as_slice() {
        [re] => C64::new(*re, 0.0),
        [re, im] => C64::new(*re, *im),
        _ => return Err(Failure::Usage("--lambda expects re or re,im".into())),
    };
    if points < 8 {
        return Err(Failure::Usage("--points must be at least 8".into()));
    }
    let p = load_problem(problem)?;
    let ne = p.graph.edges.len();
    let consts = match rhs {
        Some(text) => parse_list(text, "--rhs")?,
        None => vec![1.0; ne],
    };
    if consts.len() != ne {
        return Err(Failure::Usage(format!(
            "--rhs has {} values for {ne} edges",
            consts.len()
        )));
    }
    let r = p.rank();
    let f: Vec<EdgeFunction> = p
        .graph
        .edges
        .iter()
        .zip(&consts)
        .map(|(e, &c)| EdgeFunction::sample(e.length, points, r, |_| vec![C64::new(c, 0.0); r]))
        .collect();
    let sol = solve_resolvent(&p, lambda, &f)?;
    let text = match format {
        Format::Csv => {
            let mut t = String::from("edge,x");
            for c in 0..r {
                if r == 1 {
                    t.push_str(",re,im");
                } else {
                    t.push_str(&format!(",re_{c},im_{c}"));
                }
            }
            t.push('\n');
            for (e, u) in p.graph.edges.iter().zip(&sol.u) {
                for (i, x) in u.x.iter().enumerate() {
                    t.push_str(&format!("{},{}", e.id, fmt_real(*x)));
                    for c in 0..r {
                        let v = u.values[(i, c)];
                        t.push_str(&format!(",{},{}", fmt_real(v.re), fmt_real(v.im)));
                    }
                    t.push('\n');
                }
            }
            t
        }
        Format::Json => {
            let edges: Vec<Value> = p
                .graph
                .edges
                .iter()
                .zip(&sol.u)
                .map(|(e, u)| {
                    let values: Vec<Vec<[f64; 2]>> = (0..u.x.len())
                        .map(|i| {
                            (0..r)
                                .map(|c| [u.values[(i, c)].re, u.values[(i, c)].im])
                                .collect()
                        })
                        .collect();
                    json!({ "id": e.id, "x": u.x, "u": values })
                })
                .collect();
            document(
                "resolvent-solution",
                json!({
                    "lambda": sol.lambda,
                    "coupling_residual": sol.coupling_residual,
                    "interior_residual": sol.interior_residual,
                    "edges": edges,
                }),
            )
        }
    };
    let residuals = document(
        "residuals",
        json!({
            "lambda": sol.lambda,
            "coupling_residual": sol.coupling_residual,
            "interior_residual": sol.interior_residual,
        }),
    );
    deliver(output, &text, &[("residuals.json", residuals)], out)?;
    Ok(0)
}

fn examples(action: ExamplesAction, out: &mut dyn Write) -> Outcome {
    match action {
        ExamplesAction::List => {
            for name in builtins::NAMES {
                writeln!(out, "{name}")?;
            }
        }
        ExamplesAction::Emit { name, out: path } => {
            let p = builtins::by_name(&name)?;
            let oracle = builtins::oracle(&name)?;
            let output = OutputArgs {
                out: path,
                format: None,
            };
            deliver(
                &output,
                &emit_problem(&p),
                &[("oracle.json", document("oracle", oracle))],
                out,
            )?;
        }
    }
    Ok(0)
}
