//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Determinant in polar log form: `det = phase * exp(log_abs)`.
///
/// `log_abs` is `-inf` for an exactly singular matrix, in which case `phase` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: C64,
}

impl LogDet {
    pub fn is_singular(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    pub fn value(&self) -> C64 {
        self.phase * self.log_abs.exp()
    }
}

/// LU with partial pivoting, accumulating `log|det|` and the unit phase so that
/// large or tiny determinants never over- or underflow.
pub fn log_det(m: &CMat) -> LogDet {
    assert!(m.is_square(), "log_det of a non-square matrix");
    let n = m.nrows();
    let mut a = m.clone();
    let mut log_abs = 0.0;
    let mut phase = ONE;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[(col, col)].norm();
        for row in col + 1..n {
            let v = a[(row, col)].norm();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: ONE,
            };
        }
        if piv != col {
            a.swap_rows(piv, col);
            phase = -phase;
        }
        // Divide by the modulus first: complex division squares it and can underflow.
        let unit = a[(col, col)].unscale(best);
        log_abs += best.ln();
        phase *= unit;
        for row in col + 1..n {
            let f = a[(row, col)].unscale(best) / unit;
            if f != ZERO {
                for k in col + 1..n {
                    let t = a[(col, k)];
                    a[(row, k)] -= f * t;
                }
            }
        }
    }
    LogDet {
        log_abs,
        phase: phase / phase.norm(),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Right singular vectors belonging to the `count` smallest singular values of a
/// square or tall matrix, as columns.
pub fn smallest_right_singular_vectors(m: &CMat, count: usize) -> CMat {
    let n = m.ncols();
    // Pad wide matrices so the SVD returns a full set of right vectors.
    let a = if m.nrows() < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| {
        svd.singular_values[i]
            .partial_cmp(&svd.singular_values[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = CMat::zeros(n, count);
    for (c, &i) in idx.iter().take(count).enumerate() {
        for r in 0..n {
            out[(r, c)] = v_t[(i, r)].conj();
        }
    }
    out
}

/// Eigenvalues of a square complex matrix from its Schur form.
///
/// Companion matrices with eigenvalues of equal modulus can stall the shifted
/// QR iteration; a complex diagonal shift breaks the symmetry when that happens.
pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    let n = m.nrows();
    if n == 1 {
        return vec![m[(0, 0)]];
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    for attempt in 0..4 {
        let shift = if attempt == 0 {
            ZERO
        } else {
            C64::from_polar(0.37 * attempt as f64 * scale, 1.1 * attempt as f64)
        };
        let shifted = m + CMat::identity(n, n) * shift;
        if let Some(schur) = nalgebra::Schur::try_new(shifted, f64::EPSILON, 100 * n) {
            let (_, t) = schur.unpack();
            return (0..n).map(|i| t[(i, i)] - shift).collect();
        }
    }
    panic!("Schur iteration failed to converge for a {n}x{n} matrix");
}

pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Induced 1-norm.
pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = C64::new(2f64.powi(-s), 0.0);
    let a = a * scale;
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let r = |x: f64| C64::new(x, 0.0);
    let u_inner = &a6 * (&a6 * r(B[13]) + &a4 * r(B[11]) + &a2 * r(B[9]))
        + &a6 * r(B[7])
        + &a4 * r(B[5])
        + &a2 * r(B[3])
        + &id * r(B[1]);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * r(B[12]) + &a4 * r(B[10]) + &a2 * r(B[8]))
        + &a6 * r(B[6])
        + &a4 * r(B[4])
        + &a2 * r(B[2])
        + &id * r(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut x = solve(&q, &p).expect("Padé denominator is invertible for scaled input");
    for _ in 0..s {
        x = &x * &x;
    }
    x
}

/// Thin QR of a tall matrix; returns the orthonormal factor only.
pub fn orthonormal_columns(m: &CMat) -> CMat {
    m.clone().qr().q()
}

pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&smax) if smax == 0.0 => 0,
        Some(&smax) => s.iter().filter(|&&v| v > rel_tol * smax).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn log_det_matches_direct_determinant() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c(1., 2.),
                c(0., 1.),
                c(3., 0.),
                c(-1., 0.),
                c(2., -1.),
                c(0.5, 0.),
                c(0., 0.),
                c(1., 1.),
                c(4., 0.),
            ],
        );
        let d = m.clone().determinant();
        let ld = log_det(&m);
        assert!((ld.value() - d).norm() < 1e-12 * d.norm());
    }

    #[test]
    fn log_det_survives_extreme_scales() {
        let mut m = identity(4);
        for i in 0..4 {
            m[(i, i)] = c(1e-200, 0.0);
        }
        let ld = log_det(&m);
        assert!((ld.log_abs - 4.0 * (1e-200f64).ln()).abs() < 1e-9, "{ld:?}");
        assert!((ld.phase - ONE).norm() < 1e-14);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 2.5;
        let a = CMat::from_row_slice(2, 2, &[ZERO, c(t, 0.), c(-t, 0.), ZERO]);
        let e = expm(&a);
        assert!((e[(0, 0)] - c(t.cos(), 0.)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(t.sin(), 0.)).norm() < 1e-14);
        assert!((e[(1, 0)] + c(t.sin(), 0.)).norm() < 1e-14);
    }

    #[test]
    fn expm_of_large_oscillatory_generator_stays_unitary() {
        let t = 700.0;
        let a = CMat::from_row_slice(2, 2, &[ZERO, c(t, 0.), c(-t, 0.), ZERO]);
        let e = expm(&a);
        assert!((e[(0, 0)] - c(t.cos(), 0.)).norm() < 1e-11);
        assert!((e[(0, 1)] - c(t.sin(), 0.)).norm() < 1e-11);
    }

    #[test]
    fn expm_of_nilpotent_block() {
        let a = CMat::from_row_slice(2, 2, &[ZERO, c(3., 0.), ZERO, ZERO]);
        let e = expm(&a);
        assert!((e[(0, 1)] - c(3., 0.)).norm() < 1e-14);
        assert!((e[(0, 0)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_companion() {
        // x^2 - 3x + 2
        let a = CMat::from_row_slice(2, 2, &[ZERO, ONE, c(-2., 0.), c(3., 0.)]);
        let mut ev: Vec<f64> = eigenvalues(&a).iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn smallest_singular_vector_spans_kernel() {
        let m = CMat::from_row_slice(2, 2, &[ONE, c(-1., 0.), c(2., 0.), c(-2., 0.)]);
        let v = smallest_right_singular_vectors(&m, 1);
        let r = &m * &v;
        assert!(max_abs(&r) < 1e-12);
    }
}
