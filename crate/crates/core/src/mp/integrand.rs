//! Mean and covariance kernels of the CLT for linear spectral statistics.
//!
//! With `s = sbar(y0, z)` and `D = (1+s)^2 - y0 s^2`, the asymptotic mean
//! kernel splits into three summands,
//!
//! ```text
//! mu1 = y0 s^3 (1+s) / D^2
//! mu2 = -2 y0 s^3 / (D (1+s))
//! mu3 = s^3 / D
//! ```
//!
//! and the order-3 U-statistic correction adds
//! `mu~ = s^3 (2+s) / D`. The covariance kernel is
//!
//! ```text
//! sigma(z1,z2) = 2 s'(z1) s'(z2) / (s(z1)-s(z2))^2 - 2/(z1-z2)^2
//!              - 2 y0 s'(z1) s'(z2) / ((1+s(z1))^2 (1+s(z2))^2)
//! ```

use num_complex::Complex64;

use super::stieltjes::{sbar, sbar_prime_from};
use crate::error::{Error, Result};

/// The three summands of the mean kernel at a point off the support.
pub fn mu_parts(y0: f64, z: Complex64) -> Result<(Complex64, Complex64, Complex64)> {
    let s = sbar(y0, z)?;
    let one_plus = 1.0 + s;
    let d = one_plus * one_plus - y0 * s * s;
    let s3 = s * s * s;
    let mu1 = y0 * s3 * one_plus / (d * d);
    let mu2 = -2.0 * y0 * s3 / (d * one_plus);
    let mu3 = s3 / d;
    Ok((mu1, mu2, mu3))
}

/// Mean kernel `mu = mu1 + mu2 + mu3`.
pub fn mu(y0: f64, z: Complex64) -> Result<Complex64> {
    let (a, b, c) = mu_parts(y0, z)?;
    Ok(a + b + c)
}

/// Mean correction for the improved (order-3 U-statistic) matrix:
/// `mu~ = s^3 (2+s) / D`. The printed denominator `(1+s)^2 - s^2/y` equals D
/// because `1/y = y0`.
pub fn mu_tilde(y0: f64, z: Complex64) -> Result<Complex64> {
    let s = sbar(y0, z)?;
    let one_plus = 1.0 + s;
    let d = one_plus * one_plus - y0 * s * s;
    Ok(s * s * s * (2.0 + s) / d)
}

/// Covariance kernel at two distinct points off the support.
pub fn sigma(y0: f64, z1: Complex64, z2: Complex64) -> Result<Complex64> {
    let sep = (z1 - z2).norm();
    if sep < 1e-12 {
        return Err(Error::CoincidentPoints { sep });
    }
    let s1 = sbar(y0, z1)?;
    let s2 = sbar(y0, z2)?;
    let d1 = sbar_prime_from(y0, s1)?;
    let d2 = sbar_prime_from(y0, s2)?;
    let diff = s1 - s2;
    let zdiff = z1 - z2;
    let one1 = 1.0 + s1;
    let one2 = 1.0 + s2;
    Ok(2.0 * d1 * d2 / (diff * diff)
        - 2.0 / (zdiff * zdiff)
        - 2.0 * y0 * d1 * d2 / (one1 * one1 * one2 * one2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp::mp_support;

    fn contour_points(y0: f64, n: usize) -> Vec<Complex64> {
        let (a, b) = mp_support(y0);
        let eta_l = if a > 0.002 { 0.5 * a } else { 0.001 };
        let eta_r = b + 1.0;
        (0..n)
            .flat_map(|i| {
                let t = i as f64 / (n - 1) as f64;
                [
                    Complex64::new(eta_l + t * (eta_r - eta_l), 1.0),
                    Complex64::new(eta_r, -1.0 + 2.0 * t),
                ]
            })
            .collect()
    }

    #[test]
    fn mu_is_finite_and_conjugate_symmetric() {
        for &y0 in &[0.5, 1.25, 2.0] {
            for z in contour_points(y0, 20) {
                let v = mu(y0, z).unwrap();
                assert!(v.norm().is_finite());
                let vc = mu(y0, z.conj()).unwrap();
                assert!((vc - v.conj()).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn mu_tilde_matches_derivative_route() {
        // mu~(z) = sbar'(z) - sbar'(z)/(1+sbar(z))^2, which is the
        // scaled form of the order-3 correction after the change of
        // variables m(z) = y0 sbar(y0 z).
        for &y0 in &[0.5, 2.0] {
            for z in contour_points(y0, 15) {
                let s = sbar(y0, z).unwrap();
                let d = sbar_prime_from(y0, s).unwrap();
                let one_plus = 1.0 + s;
                let alt = d - d / (one_plus * one_plus);
                let direct = mu_tilde(y0, z).unwrap();
                assert!((alt - direct).norm() < 1e-10, "y0={y0} z={z}");
            }
        }
    }

    #[test]
    fn mu_tilde_scaling_identity() {
        // y m'(z) - y m'(z)/(1 + y m(z))^2 = y0 mu~(y0 z), checked through
        // finite differences of the independent m-transform route.
        for &y in &[0.5, 2.0] {
            let y0 = 1.0 / y;
            for &z in &[Complex64::new(1.2, 0.9), Complex64::new(0.7, -1.3)] {
                let h = 1e-6;
                let m = crate::mp::m_transform(y, z).unwrap();
                let md = (crate::mp::m_transform(y, z + Complex64::new(h, 0.0)).unwrap()
                    - crate::mp::m_transform(y, z - Complex64::new(h, 0.0)).unwrap())
                    / (2.0 * h);
                let lhs = y * md - y * md / ((1.0 + y * m) * (1.0 + y * m));
                let rhs = y0 * mu_tilde(y0, y0 * z).unwrap();
                assert!((lhs - rhs).norm() < 1e-4, "y={y} z={z}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn sigma_symmetry_and_conjugation() {
        for &y0 in &[0.5, 2.0] {
            let z1 = Complex64::new(1.0, 1.1);
            let z2 = Complex64::new(4.0, -0.7);
            let a = sigma(y0, z1, z2).unwrap();
            let b = sigma(y0, z2, z1).unwrap();
            assert!((a - b).norm() < 1e-12);
            let c = sigma(y0, z1.conj(), z2).unwrap();
            let d = sigma(y0, z1, z2.conj()).unwrap();
            assert!(c.norm().is_finite() && d.norm().is_finite());
            let both = sigma(y0, z1.conj(), z2.conj()).unwrap();
            assert!((both - a.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn sigma_near_diagonal_limit_is_stable() {
        // The two singular terms cancel as z1 -> z2.
        for &y0 in &[0.5, 2.0] {
            let z2 = Complex64::new(2.0, 1.4);
            let v2 = sigma(y0, z2 + Complex64::new(1e-2, 0.0), z2).unwrap();
            let v3 = sigma(y0, z2 + Complex64::new(1e-3, 0.0), z2).unwrap();
            assert!((v2 - v3).norm() < 1e-3, "y0={y0}: {v2} vs {v3}");
        }
    }

    #[test]
    fn sigma_rejects_coincident_points() {
        let z = Complex64::new(2.0, 1.0);
        assert!(matches!(sigma(0.5, z, z), Err(Error::CoincidentPoints { .. })));
    }
}
