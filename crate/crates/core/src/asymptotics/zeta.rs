//! Spectral zeta function continued through the split Mellin transform of the heat trace.

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numeric::quad;
use crate::spectra::Spectrum;

use super::heat::tail_bound;
use super::{weighted, AsymptoticFit, Localizer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaValue {
    pub s: f64,
    /// `None` at a pole.
    pub value: Option<f64>,
    pub pole: bool,
    /// Contribution of eigenvalues above the window to the small-time integral, bounded.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaReport {
    pub values: Vec<ZetaValue>,
    /// `(s_j, residue)` for `s_j = (1 - j) / m`; zero where the Gamma factor cancels the pole.
    pub residues: Vec<(f64, f64)>,
    /// `zeta(0) = alpha_1`.
    pub at_zero: f64,
}

fn nonpositive_integer(s: f64) -> Option<u32> {
    (s <= 0.0 && s == s.round()).then(|| (-s) as u32)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

struct Mellin<'a> {
    spectrum: &'a Spectrum,
    sup: f64,
    terms: Vec<(f64, f64)>,
    fit: &'a AsymptoticFit,
    m: f64,
    t_min: f64,
}

impl Mellin<'_> {
    fn trace(&self, t: f64) -> f64 {
        self.terms.iter().map(|(l, w)| w * (-t * l).exp()).sum()
    }

    /// `int_{t_min}^1 t^(s-1) (Tr e^{-tA} - sum_j alpha_j t^((j-1)/m)) dt` in `y = ln t`.
    fn small_time(&self, s: f64) -> f64 {
        let y0 = self.t_min.ln();
        let panels = ((-y0) * 4.0).ceil().max(4.0) as usize;
        quad::integrate(
            |y| {
                let t = y.exp();
                let model = self.fit.evaluate(t)[0];
                (s * y).exp() * (self.trace(t) - model)
            },
            y0,
            0.0,
            panels,
            16,
        )
    }

    /// `int_1^inf t^(s-1) Tr e^{-tA} dt`, eigenvalue by eigenvalue.
    fn large_time(&self, s: f64) -> f64 {
        self.terms
            .iter()
            .filter(|(l, _)| *l < 745.0)
            .map(|&(l, w)| {
                // e^{-l} int_0^{50/l} (1 + u)^(s-1) e^{-l u} du
                let u_max = 50.0 / l;
                let inner = quad::integrate(
                    |u| (1.0 + u).powf(s - 1.0) * (-l * u).exp(),
                    0.0,
                    u_max,
                    16,
                    16,
                );
                w * (-l).exp() * inner
            })
            .sum()
    }

    /// `int_{t_min}^1 t^(s-1) B(t) dt` with `B` the heat-trace tail bound.
    fn tail_integral(&self, s: f64) -> f64 {
        let y0 = self.t_min.ln();
        let panels = ((-y0) * 4.0).ceil().max(4.0) as usize;
        quad::integrate(
            |y| (s * y).exp() * tail_bound(self.spectrum, y.exp(), self.sup),
            y0,
            0.0,
            panels,
            16,
        )
    }

    fn pole_terms(&self, s: f64) -> f64 {
        self.fit
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c[0] / (s + (j as f64 - 1.0) / self.m))
            .sum()
    }

    fn value(&self, s: f64) -> Result<ZetaValue> {
        if let Some(n) = nonpositive_integer(s) {
            let j = self.m as u32 * n + 1;
            let alpha = self.fit.coefficients.get(j as usize).ok_or_else(|| {
                Error::Invalid(format!(
                    "zeta at s = -{n} needs at least {} heat invariants",
                    j + 1
                ))
            })?;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            return Ok(ZetaValue {
                s,
                value: Some(sign * factorial(n) * alpha[0]),
                pole: false,
                tail_bound: 0.0,
            });
        }
        let is_pole =
            (0..self.fit.coefficients.len()).any(|j| (s + (j as f64 - 1.0) / self.m).abs() < 1e-12);
        if is_pole {
            return Ok(ZetaValue {
                s,
                value: None,
                pole: true,
                tail_bound: f64::INFINITY,
            });
        }
        let g = gamma(s);
        let v = (self.small_time(s) + self.pole_terms(s) + self.large_time(s)) / g;
        Ok(ZetaValue {
            s,
            value: Some(v),
            pole: false,
            tail_bound: self.tail_integral(s) / g.abs(),
        })
    }
}

/// Rejects spectra whose lowest eigenvalue is not clearly above zero.
pub fn ensure_positive(spectrum: &Spectrum) -> Result<()> {
    let first = spectrum.eigenvalues.first().map_or(0.0, |e| e.lambda);
    if first <= 1e-10 * spectrum.lambda_hi().max(1.0) {
        return Err(Error::NotPositive);
    }
    Ok(())
}

/// `zeta(s) = Tr(phi A^{-s})` at every `s`, continued with the heat invariants in `fit`.
pub fn zeta(
    spectrum: &Spectrum,
    fit: &AsymptoticFit,
    s: &[f64],
    loc: Option<&Localizer>,
) -> Result<ZetaReport> {
    ensure_positive(spectrum)?;
    let m = spectrum.params.order as f64;
    let mellin = Mellin {
        spectrum,
        sup: loc.map_or(1.0, Localizer::sup),
        terms: weighted(spectrum, loc),
        fit,
        m,
        t_min: 36.0 / spectrum.lambda_hi(),
    };
    let values = s
        .iter()
        .map(|&si| mellin.value(si))
        .collect::<Result<Vec<_>>>()?;
    let residues = fit
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let sj = (1.0 - j as f64) / m;
            let r = if nonpositive_integer(sj).is_some() {
                0.0
            } else {
                c[0] / gamma(sj)
            };
            (sj, r)
        })
        .collect();
    let at_zero = fit.coefficients.get(1).map_or(0.0, |c| c[0]);
    Ok(ZetaReport {
        values,
        residues,
        at_zero,
    })
}
