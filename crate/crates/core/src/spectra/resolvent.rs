//! Direct solves of `(A - lambda) u = f` and the spectral resolvent norm.

use crate::error::{Error, Result};
use crate::graph::BoundaryContactProblem;
use crate::numeric::linalg::{self, CMat, C64};
use crate::numeric::quad::fd_weights;

use super::shooting::Shooter;
use super::{secular_matrix, SolverOptions, Spectrum};

/// Resolvent solves refuse `lambda` with a smaller normalized singular value.
pub const NEAR_SINGULAR: f64 = 1e-9;

/// Samples of an `r`-vector function on a uniform grid over one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction {
    pub x: Vec<f64>,
    /// One row per grid point, one column per fiber component.
    pub values: CMat,
}

impl EdgeFunction {
    /// `n + 1` equispaced samples of `f` on `[0, len]`.
    pub fn sample(len: f64, n: usize, r: usize, f: impl Fn(f64) -> Vec<C64>) -> Self {
        let x: Vec<f64> = (0..=n).map(|i| len * i as f64 / n as f64).collect();
        let mut values = CMat::zeros(n + 1, r);
        for (i, &xi) in x.iter().enumerate() {
            for (c, v) in f(xi).into_iter().enumerate().take(r) {
                values[(i, c)] = v;
            }
        }
        Self { x, values }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            x: self.x.clone(),
            values: CMat::zeros(self.values.nrows(), self.values.ncols()),
        }
    }

    /// Local degree-7 Lagrange interpolation, as an `r x 1` column.
    pub fn interpolate(&self, x: f64) -> CMat {
        let n = self.x.len();
        let r = self.values.ncols();
        if n == 1 {
            return self.values.rows(0, 1).transpose();
        }
        let h = (self.x[n - 1] - self.x[0]) / (n - 1) as f64;
        let width = 8.min(n);
        let centre = ((x - self.x[0]) / h).round() as isize;
        let start = (centre - width as isize / 2).clamp(0, (n - width) as isize) as usize;
        let nodes = &self.x[start..start + width];
        let w = fd_weights(x, nodes, 0);
        let mut out = CMat::zeros(r, 1);
        for (i, wi) in w.iter().enumerate() {
            for c in 0..r {
                out[(c, 0)] += self.values[(start + i, c)] * *wi;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.values)
    }
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub lambda: [f64; 2],
    pub u: Vec<EdgeFunction>,
    /// `|C u| / (|C| |u|)` over all vertex rows.
    pub coupling_residual: f64,
    /// `max |(A - lambda) u - f|` on the grid relative to `max|f| + |lambda| max|u|`.
    pub interior_residual: f64,
}

/// Solves `(A - lambda) u = f` with the vertex rows; `f` holds one grid function per edge.
pub fn solve_resolvent(
    problem: &BoundaryContactProblem,
    lambda: C64,
    f: &[EdgeFunction],
) -> Result<ResolventSolution> {
    problem.ensure_valid()?;
    let ne = problem.graph.edges.len();
    if f.len() != ne {
        return Err(Error::Shape(format!(
            "{} right-hand sides for {ne} edges",
            f.len()
        )));
    }
    let r = problem.rank();
    let m = problem.order();
    for (e, fe) in f.iter().enumerate() {
        if fe.values.ncols() != r || fe.values.nrows() != fe.x.len() || fe.x.len() < 2 {
            return Err(Error::Shape(format!(
                "right-hand side on edge {} has the wrong shape",
                problem.graph.edges[e].id
            )));
        }
    }
    let g = secular_matrix(problem, lambda, &SolverOptions::default())?;
    if g.sigma_hat() < NEAR_SINGULAR {
        return Err(Error::NearSingular(lambda));
    }

    let source = |e: usize, x: f64| f[e].interpolate(x);
    let shooter = Shooter::new(problem, lambda, Some(&source))?;
    let (h, b) = shooter.system();
    let z = linalg::solve(&h, &b).ok_or(Error::NearSingular(lambda))?;

    let mut u = Vec::with_capacity(ne);
    let mut interior: f64 = 0.0;
    let mut f_max: f64 = 0.0;
    let mut u_max: f64 = 0.0;
    for (e, fe) in f.iter().enumerate() {
        let jets = shooter.sample(&z, e, &fe.x)?;
        let mut values = CMat::zeros(fe.x.len(), r);
        for (i, j) in jets.iter().enumerate() {
            for c in 0..r {
                values[(i, c)] = j[(c, 0)];
            }
        }
        interior = interior.max(interior_defect(problem, &shooter, &z, e, lambda, fe)?);
        f_max = f_max.max(fe.max_abs());
        u_max = u_max.max(linalg::max_abs(&values));
        u.push(EdgeFunction {
            x: fe.x.clone(),
            values,
        });
    }
    let scale = f_max + lambda.norm() * u_max;
    let interior_residual = if scale > 0.0 {
        interior / scale
    } else {
        interior
    };

    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (v, cc) in problem.couplings.iter().enumerate() {
        let vert = &problem.graph.vertices[v];
        let mut jets = CMat::zeros(m * r * vert.degree(), 1);
        for (pi, ep) in vert.endpoints.iter().enumerate() {
            let j = shooter.end_jets(&z, ep.edge, ep.side);
            for k in 0..m {
                for c in 0..r {
                    jets[(k * r * vert.degree() + pi * r + c, 0)] = j[(k * r + c, 0)];
                }
            }
        }
        let stacked = cc.stacked();
        num = num.max((&stacked * &jets).norm());
        den = den.max(stacked.norm() * jets.norm());
    }
    let coupling_residual = if den > 0.0 { num / den } else { 0.0 };

    Ok(ResolventSolution {
        lambda: [lambda.re, lambda.im],
        u,
        coupling_residual,
        interior_residual,
    })
}

/// `max |(A - lambda) u - f|` over grid points, with `u^(m)` from a sixth-order
/// finite difference of `u^(m-1)` on a local stencil of spacing
/// `min(h / 7, 0.05 / kappa)` around each point.
fn interior_defect(
    problem: &BoundaryContactProblem,
    shooter: &Shooter,
    z: &CMat,
    e: usize,
    lambda: C64,
    f: &EdgeFunction,
) -> Result<f64> {
    let op = &problem.operators[e];
    let m = op.order;
    let r = op.rank;
    let xs = &f.x;
    let n = xs.len();
    let len = problem.graph.edges[e].length;
    let kappa = lambda.norm().powf(1.0 / m as f64).max(1.0);
    let h = (len / (n - 1) as f64 / 7.0).min(0.05 / kappa);
    // Stencils are shifted inward at the edge ends and never overlap, so the
    // concatenated points stay sorted.
    let starts: Vec<f64> = xs
        .iter()
        .map(|&x| (x - 3.0 * h).clamp(0.0, len - 6.0 * h))
        .collect();
    let points: Vec<f64> = starts
        .iter()
        .flat_map(|&a| (0..7).map(move |k| a + k as f64 * h))
        .collect();
    let jets = shooter.sample(z, e, &points)?;
    let mut worst: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let stencil = &points[7 * i..7 * i + 7];
        let w = fd_weights(x, stencil, 1);
        let at = fd_weights(x, stencil, 0);
        let mut top = CMat::zeros(r, 1);
        let mut here = CMat::zeros(m * r, 1);
        for k in 0..7 {
            let jk = &jets[7 * i + k];
            top += jk.rows((m - 1) * r, r) * C64::new(w[k], 0.0);
            here += jk.rows(0, m * r) * C64::new(at[k], 0.0);
        }
        let mut au = op.leading(x) * top;
        for j in 0..m {
            au += op.coefficient(j, x) * here.rows(j * r, r);
        }
        let res = au - here.rows(0, r) * lambda - f.values.row(i).transpose();
        worst = worst.max(res.norm());
    }
    Ok(worst)
}

/// `1 / dist(lambda, spectrum + [lambda_hi, inf))` for a self-adjoint problem.
pub fn resolvent_norm(spectrum: &Spectrum, lambda: C64) -> Result<f64> {
    let hi = spectrum.lambda_hi();
    let tail = if lambda.re >= hi {
        lambda.im.abs()
    } else {
        (lambda - C64::new(hi, 0.0)).norm()
    };
    let near = spectrum
        .eigenvalues
        .iter()
        .map(|e| (lambda - C64::new(e.lambda, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    if tail < near {
        return Err(Error::WindowTooSmall(format!(
            "lambda = {lambda} is closer to the unresolved part of the spectrum above {hi} than to any computed eigenvalue"
        )));
    }
    if near == 0.0 {
        return Err(Error::InSpectrum(lambda));
    }
    Ok(1.0 / near)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::spectra::eigenvalues;
    use std::f64::consts::PI;

    fn sine_rhs(n: usize) -> Vec<EdgeFunction> {
        vec![EdgeFunction::sample(PI, n, 1, |x| {
            vec![C64::new(x.sin(), 0.0)]
        })]
    }

    #[test]
    fn eigenfunction_source_gives_scaled_sine() {
        let p = builtins::interval_dirichlet();
        let sol = solve_resolvent(&p, C64::new(-1.0, 0.0), &sine_rhs(200)).unwrap();
        for (x, u) in sol.u[0].x.iter().zip(sol.u[0].values.iter()) {
            assert!((u - C64::new(x.sin() / 2.0, 0.0)).norm() < 1e-8);
        }
        assert!(sol.coupling_residual <= 1e-8);
        assert!(sol.interior_residual <= 1e-8, "{}", sol.interior_residual);
    }

    #[test]
    fn zero_source_gives_zero() {
        let p = builtins::star3_delta();
        let f: Vec<_> = (0..3)
            .map(|_| EdgeFunction::sample(1.0, 50, 1, |_| vec![C64::new(0.0, 0.0)]))
            .collect();
        let sol = solve_resolvent(&p, C64::new(3.0, 1.0), &f).unwrap();
        assert!(sol
            .u
            .iter()
            .all(|u| u.values.iter().all(|z| *z == C64::new(0.0, 0.0))));
    }

    #[test]
    fn eigenvalue_is_near_singular() {
        let p = builtins::interval_dirichlet();
        let err = solve_resolvent(&p, C64::new(1.0, 0.0), &sine_rhs(50)).unwrap_err();
        assert!(matches!(err, Error::NearSingular(_)));
        assert_eq!(err.to_string(), "near-singular resolvent at lambda = 1+0i");
    }

    #[test]
    fn interpolation_is_exact_for_septics() {
        let f = EdgeFunction::sample(2.0, 40, 1, |x| vec![C64::new(x.powi(7) - 3.0 * x, 0.0)]);
        for x in [0.0f64, 0.013, 0.77, 1.999] {
            let want = x.powi(7) - 3.0 * x;
            assert!((f.interpolate(x)[(0, 0)].re - want).abs() < 1e-11);
        }
    }

    #[test]
    fn resolvent_norms_from_spectral_distance() {
        let s = eigenvalues(
            &builtins::interval_dirichlet(),
            50.0,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!((resolvent_norm(&s, C64::new(-1.0, 0.0)).unwrap() - 0.5).abs() < 1e-9);
        assert!((resolvent_norm(&s, C64::new(2.5, 0.0)).unwrap() - 1.0 / 1.5).abs() < 1e-9);
        assert!(matches!(
            resolvent_norm(&s, C64::new(60.0, 1.0)),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn resolvent_norm_on_the_three_quarter_ray_tends_to_inverse_modulus() {
        // The nearest point of the positive half-line to r e^{3 i pi / 4} is the
        // origin, so |lambda| times the norm approaches 1 (not sqrt 2).
        let s = eigenvalues(
            &builtins::interval_dirichlet(),
            50.0,
            &SolverOptions::default(),
        )
        .unwrap();
        let r = 1e6;
        let z = C64::from_polar(r, 0.75 * PI);
        let v = r * resolvent_norm(&s, z).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "{v}");
    }
}
