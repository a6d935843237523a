//! Power-law growth `lambda_k ~ C k^p` of the ordered eigenvalues.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::Spectrum;

pub const WEYL_MIN_EIGENVALUES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylFit {
    pub constant: f64,
    pub exponent: f64,
    pub constant_stderr: f64,
    pub exponent_stderr: f64,
    /// Eigenvalues (with multiplicity) entering the regression.
    pub samples: usize,
}

/// Least squares of `ln lambda_k` against `ln k` over the upper half of the spectrum.
pub fn weyl_fit(spectrum: &Spectrum) -> Result<WeylFit> {
    let flat = spectrum.flat();
    let n = flat.len();
    if n < WEYL_MIN_EIGENVALUES {
        return Err(Error::TooFewEigenvalues {
            need: WEYL_MIN_EIGENVALUES,
            have: n,
        });
    }
    let pts: Vec<(f64, f64)> = (n / 2..n)
        .filter(|&i| flat[i] > 0.0)
        .map(|i| (((i + 1) as f64).ln(), flat[i].ln()))
        .collect();
    let q = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / q;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / q;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let sigma2 = rss / (q - 2.0).max(1.0);
    let se_slope = (sigma2 / sxx).sqrt();
    let se_intercept = (sigma2 * (1.0 / q + mx * mx / sxx)).sqrt();
    let constant = intercept.exp();
    Ok(WeylFit {
        constant,
        exponent: slope,
        constant_stderr: constant * se_intercept,
        exponent_stderr: se_slope,
        samples: pts.len(),
    })
}
