//! Adaptive Dormand–Prince 5(4) integration of matrix-valued linear ODEs.
//!
//! The state is a complex matrix so that whole fundamental systems (and an
//! optional particular-solution column) advance together. A hook runs after
//! every accepted step; callers use it to re-orthonormalize growing columns.

use super::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
}

/// Step-size underflow at the given abscissa.
#[derive(Debug, Clone, Copy)]
pub struct StepUnderflow(pub f64);

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &CMat, terms: &[(f64, &CMat)], h: f64) -> CMat {
    let mut out = y.clone();
    for (c, k) in terms {
        if *c != 0.0 {
            out += *k * C64::new(c * h, 0.0);
        }
    }
    out
}

/// Integrates `y' = rhs(x, y)` from `x0` to `x1`, updating `y` in place.
///
/// `h` carries the step size across calls so consecutive segments start warm.
pub fn integrate<F, H>(
    mut rhs: F,
    x0: f64,
    x1: f64,
    y: &mut CMat,
    h: &mut f64,
    ctl: &StepControl,
    mut after_step: H,
) -> Result<(), StepUnderflow>
where
    F: FnMut(f64, &CMat) -> CMat,
    H: FnMut(&mut CMat),
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(());
    }
    let dir = span.signum();
    let mut x = x0;
    if !(*h > 0.0) {
        *h = (span.abs() / 16.0).min(ctl.h_max);
    }
    let h_min = 1e-14 * span.abs().max(1.0);
    loop {
        let remaining = (x1 - x).abs();
        if remaining <= 1e-15 * span.abs() {
            break;
        }
        let mut step = h.min(ctl.h_max).min(remaining);
        let last = step >= remaining;
        if last {
            step = remaining;
        }
        let hs = dir * step;
        let k1 = rhs(x, y);
        let k2 = rhs(x + C2 * hs, &axpy(y, &[(A21, &k1)], hs));
        let k3 = rhs(x + C3 * hs, &axpy(y, &[(A31, &k1), (A32, &k2)], hs));
        let k4 = rhs(
            x + C4 * hs,
            &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs),
        );
        let k5 = rhs(
            x + C5 * hs,
            &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
        );
        let k6 = rhs(
            x + hs,
            &axpy(
                y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                hs,
            ),
        );
        let y_new = axpy(
            y,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            hs,
        );
        let k7 = rhs(x + hs, &y_new);
        let err = axpy(
            &CMat::zeros(y.nrows(), y.ncols()),
            &[
                (E1, &k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
            hs,
        );
        let mut err_norm: f64 = 0.0;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y_new.iter()) {
            let sc = ctl.atol + ctl.rtol * a.norm().max(b.norm());
            err_norm = err_norm.max(e.norm() / sc);
        }
        if err_norm <= 1.0 {
            x = if last { x1 } else { x + hs };
            *y = y_new;
            after_step(y);
            let fac = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !last {
                *h = step * fac;
            }
        } else {
            let fac = (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.9);
            *h = step * fac;
            if *h < h_min {
                return Err(StepUnderflow(x));
            }
        }
    }
    Ok(())
}
