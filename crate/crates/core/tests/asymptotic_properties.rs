use std::f64::consts::PI;

use bcp_core::asymptotics::{
    default_series, fit_heat_invariants, fit_resolvent_coeffs, fit_resolvent_coeffs_over,
    heat_series, heat_trace, log_grid, resolvent_fit_start, resolvent_trace, zeta, Localizer,
};
use bcp_core::builtins;
use bcp_core::numeric::C64;
use bcp_core::spectra::{eigenvalues, SolverOptions, Spectrum};
use statrs::function::gamma::gamma;

fn spectrum(name: &str, hi: f64) -> Spectrum {
    eigenvalues(
        &builtins::by_name(name).unwrap(),
        hi,
        &SolverOptions::default(),
    )
    .unwrap()
}

/// `sum_k k^(-2s)` with the Euler-Maclaurin tail beyond `n`.
fn riemann_even(s: f64) -> f64 {
    let p = 2.0 * s;
    let n = 2000u32;
    let head: f64 = (1..n).map(|k| (k as f64).powf(-p)).sum();
    let nf = n as f64;
    head + nf.powf(1.0 - p) / (p - 1.0) + 0.5 * nf.powf(-p) + p * nf.powf(-p - 1.0) / 12.0
}

#[test]
fn zeta_matches_direct_sums_in_the_convergent_half_plane() {
    let sp = spectrum("interval-dirichlet", 1e4);
    let fit = fit_heat_invariants(&default_series(&sp, 40, None).unwrap(), 4).unwrap();
    let s = [3.0, 3.5, 4.0, 6.0];
    let r = zeta(&sp, &fit, &s, None).unwrap();
    for (v, &si) in r.values.iter().zip(&s) {
        let want = riemann_even(si);
        assert!(
            (v.value.unwrap() - want).abs() <= 1e-6,
            "s = {si}: {} vs {want}",
            v.value.unwrap()
        );
    }

    let star = spectrum("star3-kirchhoff", 1e5);
    let fit = fit_heat_invariants(&default_series(&star, 40, None).unwrap(), 4).unwrap();
    let r = zeta(&star, &fit, &[3.0], None).unwrap();
    // Simple modes (pi/2 + n pi)^2 and double modes (n pi)^2.
    let direct: f64 = (0..100_000)
        .map(|n| (PI / 2.0 + n as f64 * PI).powf(-6.0) + 2.0 * ((n + 1) as f64 * PI).powf(-6.0))
        .sum();
    assert!((r.values[0].value.unwrap() - direct).abs() <= 1e-6);
}

#[test]
fn zeta_near_zero_approaches_the_constant_invariant() {
    for (name, hi, alpha1) in [
        ("interval-dirichlet", 1e4, -0.5),
        ("star3-kirchhoff", 1e5, -1.0),
    ] {
        let sp = spectrum(name, hi);
        let fit = fit_heat_invariants(&default_series(&sp, 40, None).unwrap(), 4).unwrap();
        let r = zeta(&sp, &fit, &[1e-6, -1e-6, 0.0], None).unwrap();
        assert!((r.at_zero - alpha1).abs() <= 1e-3, "{name}: {}", r.at_zero);
        for v in &r.values {
            assert!(
                (v.value.unwrap() - r.at_zero).abs() <= 1e-3,
                "{name}: zeta({}) = {:?}",
                v.s,
                v.value
            );
        }
    }
}

#[test]
fn residue_at_the_leading_pole_matches_the_continuation() {
    for name in [
        "interval-dirichlet",
        "star3-kirchhoff",
        "star3-delta",
        "beam-clamped",
    ] {
        let p = builtins::by_name(name).unwrap();
        let m = p.order() as f64;
        let hi = if p.order() == 4 { 3e9 } else { 1e5 };
        let sp = spectrum(name, hi);
        let fit = fit_heat_invariants(&default_series(&sp, 40, None).unwrap(), 4).unwrap();
        let s0 = 1.0 / m;
        let eps = 1e-5;
        let r = zeta(&sp, &fit, &[s0 + eps, s0 - eps], None).unwrap();
        let (pole, residue) = r.residues[0];
        assert_eq!(pole, s0);
        assert!((residue - fit.real(0) / gamma(s0)).abs() <= 1e-12);
        let near = 0.5 * eps * (r.values[0].value.unwrap() - r.values[1].value.unwrap());
        assert!(
            (near - residue).abs() <= 1e-3,
            "{name}: {near} vs {residue}"
        );
        let oracle = builtins::oracle(name).unwrap().alpha0.unwrap() / gamma(s0);
        assert!(
            (residue - oracle).abs() <= 1e-3,
            "{name}: {residue} vs {oracle}"
        );
    }
}

#[test]
fn widening_the_window_stays_inside_reported_bounds() {
    let small = spectrum("star3-kirchhoff", 2e3);
    let large = spectrum("star3-kirchhoff", 2e5);
    for t in [0.02, 0.05, 0.1, 0.5] {
        let a = heat_trace(&small, t, None).unwrap();
        let b = heat_trace(&large, t, None).unwrap();
        assert!(
            (a.value - b.value).abs() <= a.tail_bound + b.tail_bound,
            "t = {t}"
        );
    }
    for lambda in [
        C64::new(-10.0, 0.0),
        C64::new(-100.0, 50.0),
        C64::new(20.0, 30.0),
    ] {
        for n in [1, 2] {
            let a = resolvent_trace(&small, lambda, n, None).unwrap();
            let b = resolvent_trace(&large, lambda, n, None).unwrap();
            let d = (a.value() - b.value()).norm();
            assert!(
                d <= a.tail_bound + b.tail_bound,
                "{lambda}, N = {n}: {d} > {} + {}",
                a.tail_bound,
                b.tail_bound
            );
        }
    }
}

#[test]
fn tail_bounds_decrease_in_t() {
    let sp = spectrum("circle-glued", 1e4);
    let series = default_series(&sp, 30, None).unwrap();
    for w in series.tail_bounds.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(series.values.iter().all(|v| *v > 0.0));
}

#[test]
fn higher_powers_are_derivatives_of_lower_ones() {
    let sp = spectrum("star3-kirchhoff", 1e5);
    let h = 1e-4;
    for n in [1u32, 2, 3] {
        for l in [-5.0, -50.0] {
            let at = |x: f64, k| {
                resolvent_trace(&sp, C64::new(x, 0.0), k, None)
                    .unwrap()
                    .value[0]
            };
            let fd = (at(l + h, n) - at(l - h, n)) / (2.0 * h);
            let exact = at(l, n + 1) * n as f64;
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs(),
                "N = {n}, lambda = {l}: {fd} vs {exact}"
            );
        }
    }
}

#[test]
fn half_interval_multiplier_halves_the_heat_trace() {
    let p = builtins::split_interval_dirichlet();
    let sp = eigenvalues(&p, 1e4, &SolverOptions::default()).unwrap();
    let loc = Localizer::new(&p, &sp, &[1.0, 0.0]).unwrap();
    let ts = log_grid(3e-3, 0.3, 20);
    let full = heat_series(&sp, &ts, None).unwrap();
    let half = heat_series(&sp, &ts, Some(&loc)).unwrap();
    for (a, b) in full.values.iter().zip(&half.values) {
        assert!((b - 0.5 * a).abs() <= 1e-8 * a, "{b} vs {}", 0.5 * a);
    }
}

#[test]
fn unit_multiplier_reproduces_the_unweighted_fit() {
    let p = builtins::interval_dirichlet();
    let sp = eigenvalues(&p, 1e5, &SolverOptions::default()).unwrap();
    let loc = Localizer::new(&p, &sp, &[1.0]).unwrap();
    let a = fit_resolvent_coeffs(&sp, PI, 1, 4, None).unwrap();
    let b = fit_resolvent_coeffs(&sp, PI, 1, 4, Some(&loc)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn star_invariants() {
    let sp = spectrum("star3-kirchhoff", 1e5);
    let fit = fit_heat_invariants(&default_series(&sp, 40, None).unwrap(), 4).unwrap();
    assert!((fit.real(0) - 3.0 / (4.0 * PI).sqrt()).abs() <= 1e-3);
    assert!((fit.real(1) + 1.0).abs() <= 1e-2);
}

#[test]
#[ignore = "fails: higher coefficients move by up to the design-matrix conditioning times the residual"]
fn heat_fits_move_less_than_three_residuals_under_a_half_decade_shift() {
    let sp = spectrum("interval-dirichlet", 1e5);
    let shift = 10f64.sqrt();
    let (lo, hi) = (1e-3, 0.3);
    let a =
        fit_heat_invariants(&heat_series(&sp, &log_grid(lo, hi, 40), None).unwrap(), 4).unwrap();
    let b = fit_heat_invariants(
        &heat_series(&sp, &log_grid(lo / shift, hi / shift, 40), None).unwrap(),
        4,
    )
    .unwrap();
    let allowed = 3.0 * a.residual.max(b.residual);
    for j in 0..4 {
        let d = (a.real(j) - b.real(j)).abs();
        assert!(
            d < allowed,
            "alpha_{j}: shift {d:.3e}, allowed {allowed:.3e}"
        );
    }
}

#[test]
#[ignore = "fails: c_1 moves by about six residuals at the rounding floor"]
fn resolvent_fits_move_less_than_three_residuals_under_a_half_decade_shift() {
    let sp = spectrum("interval-dirichlet", 2e6);
    let lo = resolvent_fit_start(&sp);
    let shift = 10f64.sqrt();
    let a = fit_resolvent_coeffs_over(&sp, PI, 1, 4, (lo, 1e3 * lo), None).unwrap();
    let b = fit_resolvent_coeffs_over(&sp, PI, 1, 4, (lo * shift, 1e3 * lo * shift), None).unwrap();
    let allowed = 3.0 * a.residual.max(b.residual);
    for j in 0..2 {
        let d = (a.real(j) - b.real(j)).abs();
        assert!(d < allowed, "c_{j}: shift {d:.3e}, allowed {allowed:.3e}");
    }
}
