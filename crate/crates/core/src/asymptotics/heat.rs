//! `Tr(phi e^{-tA})` from a computed spectrum and its small-`t` expansion.

use serde::Serialize;
use statrs::function::gamma::gamma_ui;

use crate::error::{Error, Result};
use crate::spectra::{Spectrum, ROOT_TOLERANCE};

use super::{log_grid, power_fit, weighted, AsymptoticFit, Localizer};

/// A heat-trace value is refused when its tail bound exceeds this fraction of it.
pub const MAX_TAIL_FRACTION: f64 = 1e-2;
/// Fits require tail bounds below this fraction on every sample.
pub const FIT_TAIL_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatValue {
    pub t: f64,
    pub value: f64,
    pub tail_bound: f64,
    /// Set when the spectrum reaches below zero.
    pub negative_modes: bool,
}

/// Bound on the sum over eigenvalues above the window: integrating by parts
/// against `N(lambda) <= c_W lambda^(1/m) + C_0` gives
/// `c_W t^(-1/m) Gamma(1 + 1/m, t Lambda) + (C_0 - N(Lambda)) e^(-t Lambda)`.
pub(crate) fn tail_bound(spectrum: &Spectrum, t: f64, sup_phi: f64) -> f64 {
    let p = &spectrum.params;
    let hi = spectrum.lambda_hi();
    let a = 1.0 / p.order as f64;
    let observed = spectrum.total_multiplicity() as f64;
    let x = t * hi;
    let weyl = p.weyl_coefficient * t.powf(-a) * gamma_ui(1.0 + a, x);
    let remainder = (p.tail_constant - observed) * (-x).exp();
    sup_phi * (weyl + remainder).max(0.0)
}

/// The truncated sum and a bound on its error from rounding and from the
/// finite accuracy of the eigenvalues.
fn partial_sum(terms: &[(f64, f64)], t: f64, order: usize) -> (f64, f64) {
    let delta = eigenvalue_accuracy(order);
    let mut sum = 0.0;
    let mut carry = 0.0;
    let mut error = 0.0;
    for (l, w) in terms {
        let v = w * (-t * l).exp();
        let next = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - next) + v
        } else {
            (v - next) + sum
        };
        sum = next;
        error += v.abs() * (t * l.abs() * delta + 4.0 * f64::EPSILON);
    }
    (
        sum + carry,
        error + 2.0 * f64::EPSILON * (sum + carry).abs(),
    )
}

/// Relative accuracy of a refined eigenvalue `lambda = k^m`.
pub(crate) fn eigenvalue_accuracy(order: usize) -> f64 {
    4.0 * order as f64 * ROOT_TOLERANCE
}

pub fn heat_trace(spectrum: &Spectrum, t: f64, loc: Option<&Localizer>) -> Result<HeatValue> {
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("heat trace needs t > 0, got {t}")));
    }
    let terms = weighted(spectrum, loc);
    let (value, accuracy) = partial_sum(&terms, t, spectrum.params.order);
    let bound = tail_bound(spectrum, t, loc.map_or(1.0, Localizer::sup)) + accuracy;
    if bound > MAX_TAIL_FRACTION * value.abs() {
        return Err(Error::WindowInsufficient(t));
    }
    Ok(HeatValue {
        t,
        value,
        tail_bound: bound,
        negative_modes: spectrum.eigenvalues.first().is_some_and(|e| e.lambda < 0.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatTraceSeries {
    pub order: usize,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
    pub negative_modes: bool,
}

impl HeatTraceSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,value,tail_bound\n");
        for i in 0..self.t.len() {
            s.push_str(&format!(
                "{},{},{}\n",
                crate::format::fmt_real(self.t[i]),
                crate::format::fmt_real(self.values[i]),
                crate::format::fmt_real(self.tail_bounds[i])
            ));
        }
        s
    }
}

/// The `t` window `[30 / lambda_hi, (min_length / (2.5 m))^m]` where the truncated
/// sum is accurate and exponentially small boundary-reflection terms are negligible.
///
/// For `m = 2` the upper end is `min_length^2 / 25`. The heat kernel of an order-`m`
/// operator decays like `exp(-c (|x|^m / t)^(1/(m-1)))`, so higher orders need a
/// proportionally shorter length scale.
pub fn default_heat_window(spectrum: &Spectrum) -> (f64, f64) {
    let m = spectrum.params.order;
    let l = spectrum.params.min_length / (2.5 * m as f64);
    (30.0 / spectrum.lambda_hi(), l.powi(m as i32))
}

pub fn heat_series(
    spectrum: &Spectrum,
    t: &[f64],
    loc: Option<&Localizer>,
) -> Result<HeatTraceSeries> {
    let pts = t
        .iter()
        .map(|&ti| heat_trace(spectrum, ti, loc))
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatTraceSeries {
        order: spectrum.params.order,
        t: t.to_vec(),
        values: pts.iter().map(|p| p.value).collect(),
        tail_bounds: pts.iter().map(|p| p.tail_bound).collect(),
        phi: loc.map(|l| l.phi.clone()),
        negative_modes: pts.iter().any(|p| p.negative_modes),
    })
}

/// Log-spaced series over the default window.
pub fn default_series(
    spectrum: &Spectrum,
    points: usize,
    loc: Option<&Localizer>,
) -> Result<HeatTraceSeries> {
    let (a, b) = default_heat_window(spectrum);
    if a >= b {
        return Err(Error::WindowInsufficient(b));
    }
    heat_series(spectrum, &log_grid(a, b, points), loc)
}

/// `alpha_0 .. alpha_{J-1}` in `Tr ~ sum_j alpha_j t^((j-1)/m)`.
pub fn fit_heat_invariants(series: &HeatTraceSeries, terms: usize) -> Result<AsymptoticFit> {
    for ((t, v), b) in series.t.iter().zip(&series.values).zip(&series.tail_bounds) {
        if *b > FIT_TAIL_FRACTION * v.abs() {
            return Err(Error::WindowInsufficient(*t));
        }
    }
    let m = series.order as f64;
    let exps: Vec<f64> = (0..terms).map(|j| (j as f64 - 1.0) / m).collect();
    let ys: Vec<[f64; 2]> = series.values.iter().map(|v| [*v, 0.0]).collect();
    power_fit(&series.t, &ys, &exps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::spectra::{eigenvalues, SolverOptions};
    use std::f64::consts::PI;

    fn spectrum_of(name: &str, hi: f64) -> Spectrum {
        eigenvalues(
            &builtins::by_name(name).unwrap(),
            hi,
            &SolverOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn neumann_theta_sum() {
        let s = spectrum_of("interval-neumann", 1e4);
        let h = heat_trace(&s, 0.01, None).unwrap();
        let oracle: f64 = (0..2000).map(|k| (-0.01 * (k * k) as f64).exp()).sum();
        assert!((h.value - oracle).abs() <= h.tail_bound + 1e-10);
    }

    #[test]
    fn large_time_is_first_mode() {
        let s = spectrum_of("interval-dirichlet", 100.0);
        let h = heat_trace(&s, 10.0, None).unwrap();
        assert!((h.value - (-10f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn small_time_needs_a_larger_window() {
        let s = spectrum_of("interval-dirichlet", 100.0);
        assert!(matches!(
            heat_trace(&s, 1e-4, None),
            Err(Error::WindowInsufficient(_))
        ));
    }

    #[test]
    fn tail_bound_covers_truncation() {
        let small = spectrum_of("interval-dirichlet", 400.0);
        let oracle: f64 = (1..5000).map(|k| (-0.02 * (k * k) as f64).exp()).sum();
        let h = heat_trace(&small, 0.02, None).unwrap();
        assert!((h.value - oracle).abs() <= h.tail_bound);
    }

    #[test]
    fn dirichlet_invariants() {
        let s = spectrum_of("interval-dirichlet", 1e4);
        let series = default_series(&s, 40, None).unwrap();
        let fit = fit_heat_invariants(&series, 4).unwrap();
        assert!((fit.real(0) - PI / (4.0 * PI).sqrt()).abs() < 1e-3);
        assert!((fit.real(1) + 0.5).abs() < 1e-2);
    }

    #[test]
    fn neumann_second_invariant() {
        let s = spectrum_of("interval-neumann", 1e4);
        let fit = fit_heat_invariants(&default_series(&s, 40, None).unwrap(), 4).unwrap();
        assert!((fit.real(1) - 0.5).abs() < 1e-2);
    }
}
