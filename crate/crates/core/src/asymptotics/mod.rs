//! Heat-trace, resolvent-trace, zeta and Weyl asymptotics extracted from computed spectra.

mod heat;
mod resolvent;
mod weyl;
mod zeta;

pub use heat::{
    default_heat_window, default_series, fit_heat_invariants, heat_series, heat_trace,
    HeatTraceSeries, HeatValue,
};
pub use resolvent::{
    fit_resolvent_coeffs, fit_resolvent_coeffs_over, resolvent_fit_start, resolvent_trace,
    ResolventTrace,
};
pub use weyl::{weyl_fit, WeylFit, WEYL_MIN_EIGENVALUES};
pub use zeta::{ensure_positive, zeta, ZetaReport, ZetaValue};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::BoundaryContactProblem;
use crate::spectra::{eigenfunction_edge_masses, Spectrum};

/// Designs whose column-normalized condition number exceeds this are refused.
pub const MAX_CONDITION: f64 = 1e10;
pub const DEFAULT_TERMS: usize = 4;

/// Per-eigenvalue weights `m_k * phi_k` for a multiplier `phi` constant on each edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Localizer {
    pub phi: Vec<f64>,
    /// One weight per distinct eigenvalue of the spectrum it was built from.
    pub weights: Vec<f64>,
}

impl Localizer {
    /// Weights from the edge masses of every eigenspace in `spectrum`.
    pub fn new(problem: &BoundaryContactProblem, spectrum: &Spectrum, phi: &[f64]) -> Result<Self> {
        if phi.len() != problem.graph.edges.len() {
            return Err(Error::Shape(format!(
                "multiplier has {} values for {} edges",
                phi.len(),
                problem.graph.edges.len()
            )));
        }
        let weights = spectrum
            .eigenvalues
            .par_iter()
            .map(|e| {
                let masses = eigenfunction_edge_masses(problem, e.lambda)?;
                let total: f64 = masses.iter().sum();
                let local: f64 = masses.iter().zip(phi).map(|(m, p)| m * p).sum();
                // Dividing by the computed total makes phi = 1 reproduce m_k exactly.
                Ok(if total > 0.0 {
                    e.multiplicity as f64 * local / total
                } else {
                    0.0
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            phi: phi.to_vec(),
            weights,
        })
    }

    pub fn sup(&self) -> f64 {
        self.phi.iter().fold(0.0, |a, p| a.max(p.abs()))
    }
}

/// `(lambda_k, weight_k)` for every distinct eigenvalue.
pub(crate) fn weighted(spectrum: &Spectrum, loc: Option<&Localizer>) -> Vec<(f64, f64)> {
    spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, e)| {
            (
                e.lambda,
                loc.map_or(e.multiplicity as f64, |l| l.weights[i]),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFit {
    /// Powers of the sample variable (`t` for heat traces, `|lambda|` for resolvent traces).
    pub exponents: Vec<f64>,
    /// `[re, im]` per exponent.
    pub coefficients: Vec<[f64; 2]>,
    /// Euclidean norm of the relative misfits over the samples.
    pub residual: f64,
    pub condition: f64,
    pub window: (f64, f64),
}

impl AsymptoticFit {
    pub fn real(&self, j: usize) -> f64 {
        self.coefficients[j][0]
    }

    pub fn evaluate(&self, x: f64) -> [f64; 2] {
        let mut re = 0.0;
        let mut im = 0.0;
        for (p, c) in self.exponents.iter().zip(&self.coefficients) {
            let v = x.powf(*p);
            re += c[0] * v;
            im += c[1] * v;
        }
        [re, im]
    }
}

/// Least squares of `y_i ~ sum_j c_j x_i^{p_j}` weighted by `1/|y_i|`.
pub(crate) fn power_fit(xs: &[f64], ys: &[[f64; 2]], exponents: &[f64]) -> Result<AsymptoticFit> {
    let n = xs.len();
    let j = exponents.len();
    if n < j {
        return Err(Error::IllConditioned(f64::INFINITY));
    }
    let w: Vec<f64> = ys
        .iter()
        .map(|y| {
            let a = y[0].hypot(y[1]);
            if a > 0.0 {
                1.0 / a
            } else {
                1.0
            }
        })
        .collect();
    let mut a = DMatrix::<f64>::from_fn(n, j, |i, c| w[i] * xs[i].powf(exponents[c]));
    let norms: Vec<f64> = (0..j).map(|c| a.column(c).norm()).collect();
    for (c, s) in norms.iter().enumerate() {
        a.column_mut(c).unscale_mut(*s);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let mut rhs = DMatrix::<f64>::zeros(n, 2);
    for i in 0..n {
        rhs[(i, 0)] = w[i] * ys[i][0];
        rhs[(i, 1)] = w[i] * ys[i][1];
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::IllConditioned(condition))?;
    let fitted = &a * &sol;
    let residual = (0..n)
        .map(|i| (fitted[(i, 0)] - rhs[(i, 0)]).powi(2) + (fitted[(i, 1)] - rhs[(i, 1)]).powi(2))
        .sum::<f64>()
        .sqrt();
    let coefficients = (0..j)
        .map(|c| [sol[(c, 0)] / norms[c], sol[(c, 1)] / norms[c]])
        .collect();
    Ok(AsymptoticFit {
        exponents: exponents.to_vec(),
        coefficients,
        residual,
        condition,
        window: (xs[0], xs[n - 1]),
    })
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
