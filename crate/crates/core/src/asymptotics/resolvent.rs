//! `Tr(phi (A - lambda)^{-N})` with a modelled tail, and its large-`|lambda|` expansion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::linalg::C64;
use crate::numeric::quad;
use crate::spectra::Spectrum;

use super::{log_grid, power_fit, weighted, AsymptoticFit, Localizer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventTrace {
    pub lambda: [f64; 2],
    pub order: u32,
    /// Partial sum plus the modelled tail.
    pub value: [f64; 2],
    /// The modelled contribution of eigenvalues above the window.
    pub tail_estimate: [f64; 2],
    /// Bound on the error of `value`.
    pub tail_bound: f64,
}

impl ResolventTrace {
    pub fn value(&self) -> C64 {
        C64::new(self.value[0], self.value[1])
    }
}

/// Offset `beta` in the model `lambda_j = ((j - 1/2 - beta) / c_W)^m`, averaged over
/// the upper half of the computed eigenvalues (counted with multiplicity).
fn counting_offset(flat: &[f64], c_w: f64, m: usize) -> f64 {
    let n = flat.len();
    let lo = n / 2;
    let slice: Vec<f64> = (lo..n)
        .filter(|&i| flat[i] > 0.0)
        .map(|i| (i + 1) as f64 - 0.5 - c_w * flat[i].powf(1.0 / m as f64))
        .collect();
    if slice.is_empty() {
        0.0
    } else {
        slice.iter().sum::<f64>() / slice.len() as f64
    }
}

/// Taylor coefficients of `p(h)^alpha` from those of `p` (J.C.P. Miller's recurrence).
fn series_power(p: &[C64], alpha: f64) -> Vec<C64> {
    let n = p.len();
    let mut q = vec![C64::new(0.0, 0.0); n];
    q[0] = p[0].powf(alpha);
    for k in 1..n {
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..=k {
            acc += p[j] * q[k - j] * ((alpha + 1.0) * j as f64 - k as f64);
        }
        q[k] = acc / (p[0] * k as f64);
    }
    q
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Euler-Maclaurin estimate of `sum_{j > K} g(lambda_j)` under the counting model,
/// with `g(mu) = (mu - lambda)^(-N)`.
fn tail_estimate(k: usize, beta: f64, c_w: f64, m: usize, lambda: C64, n: u32) -> C64 {
    let u0 = k as f64 - beta;
    if u0 <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    let mu0 = (u0 / c_w).powi(m as i32);
    let alpha = -(n as f64);
    // Integral over kappa >= K + 1/2, in mu = mu0 e^y.
    let rate = n as f64 - 1.0 / m as f64;
    let y_max = 42.0 / rate;
    let panels = (y_max.ceil() as usize).max(8) * 2;
    let (xs, ws) = quad::gauss_legendre(16);
    let h = y_max / panels as f64;
    let mut integral = C64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (t, w) in xs.iter().zip(&ws) {
            let y = mid + 0.5 * h * t;
            let mu = mu0 * y.exp();
            let dkappa = c_w / m as f64 * mu.powf(1.0 / m as f64);
            integral += (C64::new(mu, 0.0) - lambda).powf(alpha) * (dkappa * 0.5 * h * w);
        }
    }
    // Derivatives of G(kappa) = g(mu(kappa)) at kappa = K + 1/2.
    let mut p: Vec<C64> = (0..=3)
        .map(|j| {
            if j > m {
                C64::new(0.0, 0.0)
            } else {
                C64::new(mu0 * binomial(m, j) / u0.powi(j as i32), 0.0)
            }
        })
        .collect();
    p[0] -= lambda;
    let q = series_power(&p, alpha);
    integral + q[1] / 24.0 - q[3] * (6.0 * 7.0 / 5760.0)
}

/// `sum_k m_k phi_k (lambda_k - lambda)^(-N)` plus a modelled tail.
pub fn resolvent_trace(
    spectrum: &Spectrum,
    lambda: C64,
    order: u32,
    loc: Option<&Localizer>,
) -> Result<ResolventTrace> {
    let m = spectrum.params.order;
    if order == 0 || order as f64 <= 1.0 / m as f64 {
        return Err(Error::NotTraceClass(order));
    }
    let terms = weighted(spectrum, loc);
    for (l, _) in &terms {
        if (lambda - C64::new(*l, 0.0)).norm() <= 1e-12 * l.abs().max(1.0) {
            return Err(Error::InSpectrum(lambda));
        }
    }
    let hi = spectrum.lambda_hi();
    if lambda.im == 0.0 && lambda.re >= hi {
        return Err(Error::WindowTooSmall(format!(
            "lambda = {} lies above the window",
            lambda.re
        )));
    }
    let alpha = -(order as f64);
    let delta = super::heat::eigenvalue_accuracy(m);
    let mut partial = C64::new(0.0, 0.0);
    let mut accuracy = 0.0;
    for (l, w) in &terms {
        let gap = C64::new(*l, 0.0) - lambda;
        let v = gap.powf(alpha) * *w;
        partial += v;
        accuracy += v.norm() * (order as f64 * l.abs() * delta / gap.norm() + 8.0 * f64::EPSILON)
            + v.norm().min(2.0 * f64::EPSILON * partial.norm());
    }

    let c_w = spectrum.params.weyl_coefficient;
    let flat = spectrum.flat();
    let k = flat.len();
    let beta = counting_offset(&flat, c_w, m);
    let sup = loc.map_or(1.0, Localizer::sup);
    let estimate = tail_estimate(k, beta, c_w, m, lambda, order) * sup;

    // |sum over the tail| <= |g(hi)| (C_0 + c_W hi^(1/m) - K) + c_W int_hi^inf |g| dmu^(1/m).
    let a = 1.0 / m as f64;
    let g = |mu: f64| (C64::new(mu, 0.0) - lambda).norm().powf(alpha);
    let excess = (spectrum.params.tail_constant + c_w * hi.powf(a) - k as f64).max(0.0);
    let tail_integral = {
        let rate = order as f64 - a;
        let y_max = 42.0 / rate;
        quad::integrate(
            |y| {
                let mu = hi * y.exp();
                g(mu) * c_w * a * mu.powf(a)
            },
            0.0,
            y_max,
            (y_max.ceil() as usize).max(8) * 2,
            16,
        )
    };
    let bound = sup * (g(hi) * excess + tail_integral) + estimate.norm() + accuracy;

    let value = partial + estimate;
    Ok(ResolventTrace {
        lambda: [lambda.re, lambda.im],
        order,
        value: [value.re, value.im],
        tail_estimate: [estimate.re, estimate.im],
        tail_bound: bound,
    })
}

/// `c_0 .. c_{J-1}` in `Tr ~ sum_j c_j |lambda|^((1-j)/m - N)` along the ray `arg lambda = theta`.
///
/// Samples `|lambda|` over three decades from `(12.5 / min_length)^m`; the window must
/// reach at least four times beyond the largest sample.
pub fn fit_resolvent_coeffs(
    spectrum: &Spectrum,
    theta: f64,
    order: u32,
    terms: usize,
    loc: Option<&Localizer>,
) -> Result<AsymptoticFit> {
    let start = resolvent_fit_start(spectrum);
    fit_resolvent_coeffs_over(spectrum, theta, order, terms, (start, 1e3 * start), loc)
}

/// Smallest sample `|lambda|` used by the resolvent fits.
pub fn resolvent_fit_start(spectrum: &Spectrum) -> f64 {
    (12.5 / spectrum.params.min_length).powi(spectrum.params.order as i32)
}

/// [`fit_resolvent_coeffs`] with samples `|lambda|` log-spaced over `window`.
pub fn fit_resolvent_coeffs_over(
    spectrum: &Spectrum,
    theta: f64,
    order: u32,
    terms: usize,
    window: (f64, f64),
    loc: Option<&Localizer>,
) -> Result<AsymptoticFit> {
    let m = spectrum.params.order;
    let (s_lo, s_hi) = window;
    if !(s_lo > 0.0 && s_hi > s_lo) {
        return Err(Error::Invalid(format!(
            "resolvent fit window [{s_lo}, {s_hi}] is empty"
        )));
    }
    if 4.0 * s_hi > spectrum.lambda_hi() {
        return Err(Error::WindowTooSmall(format!(
            "resolvent fit samples up to |lambda| = {s_hi:.3e} need lambda_hi >= {:.3e}",
            4.0 * s_hi
        )));
    }
    let ss = log_grid(s_lo, s_hi, 40);
    let dir = C64::from_polar(1.0, theta);
    let ys = ss
        .iter()
        .map(|&s| resolvent_trace(spectrum, dir * s, order, loc).map(|r| r.value))
        .collect::<Result<Vec<_>>>()?;
    let exps: Vec<f64> = (0..terms)
        .map(|j| (1.0 - j as f64) / m as f64 - order as f64)
        .collect();
    power_fit(&ss, &ys, &exps)
}
