//! Limiting Stieltjes transforms with explicit branch control.
//!
//! `sbar(y0, z)` is the Stieltjes transform of the limiting spectral law of
//! the rescaled rank correlation matrix, the root of
//!
//! ```text
//! z sbar^2 + (z + 1 - y0) sbar + 1 = 0
//! ```
//!
//! The principal branch of the printed radical is discontinuous where a
//! rectangle contour crosses the real axis, so the root is selected by
//! anchors instead: off the real axis the transform maps the upper half
//! plane to itself; on the real axis the correct root is pinned by the sign
//! and ordering facts that hold to the left and right of the support.

use num_complex::Complex64;

use super::mp_support;
use crate::error::{Error, Result};

/// Solve the quadratic a w^2 + b w + c = 0 without cancellation.
fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, Complex64) {
    let disc = b * b - 4.0 * a * c;
    let mut sq = disc.sqrt();
    // Align the radical with b so that b + sq never cancels.
    if (b.re * sq.re + b.im * sq.im) < 0.0 {
        sq = -sq;
    }
    let q = -0.5 * (b + sq);
    (q / a, c / q)
}

/// Branch-anchored Stieltjes transform of the rescaled-spectrum law with
/// aspect parameter y0. Rejects z = 0 and real z inside the closed bulk
/// support `[(1-sqrt(y0))^2, (1+sqrt(y0))^2]`.
pub fn sbar(y0: f64, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Zero);
    }
    let (a, b) = mp_support(y0);
    if z.im == 0.0 && z.re >= a && z.re <= b {
        return Err(Error::Support { re: z.re, im: z.im, lo: a, hi: b });
    }
    let (r1, r2) = quadratic_roots(z, z + (1.0 - y0), Complex64::new(1.0, 0.0));

    let root = if z.im != 0.0 {
        // Exactly one root continues the upper/lower half-plane mapping.
        if r1.im * z.im >= r2.im * z.im {
            r1
        } else {
            r2
        }
    } else {
        let x = z.re;
        if x > b {
            // Right of the support both roots are negative; the transform is
            // the one nearer zero (it decays like -1/x).
            if r1.re >= r2.re {
                r1
            } else {
                r2
            }
        } else if x > 0.0 {
            // In the gap between the origin and the bulk the transform is the
            // smaller root: it continues from sbar(0+) = 1/(y0 - 1) for
            // y0 > 1 and diverges to -inf at the origin atom for y0 < 1.
            if r1.re <= r2.re {
                r1
            } else {
                r2
            }
        } else {
            // x < 0: the measure lives on [0, inf), so the transform is
            // positive there; the roots have opposite signs.
            if r1.re > 0.0 {
                r1
            } else {
                r2
            }
        }
    };
    Ok(root)
}

/// Derivative of [`sbar`], from the closed form
/// `sbar' = sbar^2 (1+sbar)^2 / ((1+sbar)^2 - y0 sbar^2)`.
pub fn sbar_prime(y0: f64, z: Complex64) -> Result<Complex64> {
    let s = sbar(y0, z)?;
    sbar_prime_from(y0, s)
}

/// Same as [`sbar_prime`] but reusing an already computed transform value.
pub fn sbar_prime_from(y0: f64, s: Complex64) -> Result<Complex64> {
    let one_plus = 1.0 + s;
    let denom = one_plus * one_plus - y0 * s * s;
    if denom.norm() == 0.0 {
        return Err(Error::Domain("sbar' undefined at a support edge".into()));
    }
    Ok(s * s * one_plus * one_plus / denom)
}

/// Stieltjes transform of the Gram-side limiting law:
/// `s(z) = (sbar(z) + 1/z)/y0 - 1/z`.
pub fn s_transform(y0: f64, z: Complex64) -> Result<Complex64> {
    let sb = sbar(y0, z)?;
    let inv_z = z.inv();
    Ok((sb + inv_z) / y0 - inv_z)
}

/// Stieltjes transform of the Marchenko–Pastur law F_y, evaluated through
/// the scaling identity `m(y, z) = y0 * sbar(y0, y0 z)` with y0 = 1/y.
pub fn m_transform(y: f64, z: Complex64) -> Result<Complex64> {
    let y0 = 1.0 / y;
    Ok(y0 * sbar(y0, y0 * z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn residual(y0: f64, z: Complex64, s: Complex64) -> f64 {
        (z * s * s + (z + (1.0 - y0)) * s + 1.0).norm()
    }

    fn rectangle_points(y0: f64, n: usize) -> Vec<Complex64> {
        let (a, b) = mp_support(y0);
        let eta_l = if a > 0.002 { 0.5 * a } else { 0.001 };
        let eta_r = b + 1.0;
        let mut pts = Vec::new();
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            pts.push(Complex64::new(eta_l + t * (eta_r - eta_l), 1.0));
            pts.push(Complex64::new(eta_l + t * (eta_r - eta_l), -1.0));
            pts.push(Complex64::new(eta_l, -1.0 + 2.0 * t));
            pts.push(Complex64::new(eta_r, -1.0 + 2.0 * t));
        }
        pts
    }

    #[test]
    fn quadratic_residual_on_contour() {
        for &y0 in &[0.5, 2.0] {
            for z in rectangle_points(y0, 25) {
                let s = sbar(y0, z).unwrap();
                assert!(residual(y0, z, s) < 1e-12, "y0={y0}, z={z}, res={}", residual(y0, z, s));
            }
        }
    }

    #[test]
    fn right_of_support_in_unit_interval() {
        for &y0 in &[0.3, 0.5, 1.0, 2.0, 5.0] {
            let (_, b) = mp_support(y0);
            let x = Complex64::new(b + 1.0, 0.0);
            let s = sbar(y0, x).unwrap();
            assert!(s.im == 0.0);
            assert!(-1.0 < s.re && s.re < 0.0, "y0={y0}: got {}", s.re);
        }
    }

    #[test]
    fn left_gap_anchors() {
        // y0 > 1: on (0, a) the transform exceeds 1/(y0-1) and continues
        // from its origin value.
        for &y0 in &[1.5, 2.0, 5.0] {
            let (a, _) = mp_support(y0);
            let x = Complex64::new(0.5 * a, 0.0);
            let s = sbar(y0, x).unwrap();
            assert!(s.re > 1.0 / (y0 - 1.0), "y0={y0}: got {}", s.re);
            let near0 = sbar(y0, Complex64::new(1e-9, 0.0)).unwrap();
            assert_abs_diff_eq!(near0.re, 1.0 / (y0 - 1.0), epsilon = 1e-6);
        }
        // y0 < 1: the origin carries an atom, so the transform dives to -inf.
        let s_small = sbar(0.5, Complex64::new(1e-6, 0.0)).unwrap();
        assert!(s_small.re < -1e5);
    }

    #[test]
    fn asymptotics_at_infinity() {
        for &y0 in &[0.5, 2.0] {
            let z = Complex64::new(0.0, 1e6);
            let s = sbar(y0, z).unwrap();
            assert!((z * s + 1.0).norm() < 1e-5);
        }
    }

    #[test]
    fn upper_half_plane_maps_up_and_conjugates() {
        for &y0 in &[0.5, 1.0, 2.0] {
            for z in rectangle_points(y0, 10) {
                let s = sbar(y0, z).unwrap();
                if z.im != 0.0 {
                    assert!(s.im * z.im > 0.0);
                }
                let sc = sbar(y0, z.conj()).unwrap();
                assert!((sc - s.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_support_and_origin() {
        assert!(matches!(sbar(2.0, Complex64::new(0.0, 0.0)), Err(Error::Zero)));
        let (a, b) = mp_support(2.0);
        assert!(matches!(sbar(2.0, Complex64::new(0.5 * (a + b), 0.0)), Err(Error::Support { .. })));
        assert!(matches!(sbar(2.0, Complex64::new(a, 0.0)), Err(Error::Support { .. })));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for &y0 in &[0.5, 2.0] {
            for &z in &[Complex64::new(4.5, 1.0), Complex64::new(0.05, -0.8), Complex64::new(7.0, 0.0)] {
                if z.re < 1.0 && y0 < 1.0 {
                    continue; // keep clear of the y0<1 origin atom
                }
                let h = 1e-6;
                let d = sbar_prime(y0, z).unwrap();
                let fd = (sbar(y0, z + Complex64::new(h, 0.0)).unwrap()
                    - sbar(y0, z - Complex64::new(h, 0.0)).unwrap())
                    / (2.0 * h);
                assert!((d - fd).norm() < 1e-6, "y0={y0} z={z}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn companion_transforms_satisfy_their_quadratics() {
        for &y0 in &[0.5, 1.25, 2.0] {
            for z in rectangle_points(y0, 8) {
                let s = s_transform(y0, z).unwrap();
                let res = (y0 * z * s * s + (z + (y0 - 1.0)) * s + 1.0).norm();
                assert!(res < 1e-10, "s residual {res} at y0={y0}, z={z}");
            }
        }
        for &y in &[0.5, 2.0] {
            for z in rectangle_points(1.0 / y, 8) {
                let m = m_transform(y, z).unwrap();
                let res = (y * z * m * m + (z + (y - 1.0)) * m + 1.0).norm();
                assert!(res < 1e-10, "m residual {res} at y={y}, z={z}");
                if z.im != 0.0 {
                    assert!(m.im * z.im > 0.0);
                }
            }
        }
    }

    #[test]
    fn m_transform_matches_direct_radical_off_axis() {
        // Independent route: in the open upper half plane the principal
        // radical with the Im-positive sign gives the transform directly.
        for &y in &[0.5, 2.0] {
            for &z in &[Complex64::new(1.0, 0.5), Complex64::new(3.0, 1.0), Complex64::new(0.2, 2.0)] {
                let m = m_transform(y, z).unwrap();
                let disc = ((1.0 + y) - z) * ((1.0 + y) - z) - 4.0 * y;
                let mut sq = disc.sqrt();
                let candidate = |sq: Complex64| ((1.0 - y) - z + sq) / (2.0 * y * z);
                let mut direct = candidate(sq);
                if direct.im <= 0.0 {
                    sq = -sq;
                    direct = candidate(sq);
                }
                assert!((m - direct).norm() < 1e-12, "y={y} z={z}: {m} vs {direct}");
            }
        }
    }
}
