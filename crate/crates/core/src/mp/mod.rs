//! Marchenko–Pastur limits for rank correlation spectra.
//!
//! Submodules:
//! * [`stieltjes`] — the limiting Stieltjes transforms with explicit branch
//!   control off the support;
//! * [`integrand`] — the mean and covariance kernels of the CLT for linear
//!   spectral statistics;
//! * [`contour`] — rectangle contours and Gauss–Legendre quadrature turning
//!   those kernels into asymptotic moments for arbitrary analytic f;
//! * [`closed_form`] — the explicit moment formulas for log and power
//!   statistics, used both directly and as the cross-check for quadrature.

pub mod closed_form;
pub mod contour;
pub mod integrand;
pub mod stieltjes;

pub use closed_form::{clt_closed_form, CltMoments, LssFamily, Variant};
pub use contour::{lss_asymptotics, lss_mean_contour, lss_variance_contour, Contour, QuadratureOptions};
pub use stieltjes::{m_transform, s_transform, sbar, sbar_prime};

use crate::error::{Error, Result};

/// Support endpoints of the Marchenko–Pastur law with ratio y:
/// `((1 - sqrt(y))^2, (1 + sqrt(y))^2)`.
pub fn mp_support(y: f64) -> (f64, f64) {
    let r = y.sqrt();
    ((1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r))
}

/// Density of the Marchenko–Pastur law F_y on its bulk; zero outside. The
/// point mass at the origin for y > 1 is reported by [`mp_point_mass`], not
/// by the density.
pub fn mp_density(y: f64, x: f64) -> f64 {
    let (a, b) = mp_support(y);
    if x <= a || x >= b {
        return 0.0;
    }
    ((x - a) * (b - x)).sqrt() / (2.0 * std::f64::consts::PI * x * y)
}

/// Mass of F_y at the origin: `1 - 1/y` when y > 1, else zero.
pub fn mp_point_mass(y: f64) -> f64 {
    if y > 1.0 {
        1.0 - 1.0 / y
    } else {
        0.0
    }
}

/// Exact binomial coefficient as f64; zero when k > n.
pub(crate) fn binom(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    (num / den) as f64
}

/// k-th moment of F_y via the Narayana-number expansion
/// `sum_{j=0}^{k-1} y^j/(j+1) * C(k,j) * C(k-1,j)`.
pub fn mp_moment(y: f64, k: u32) -> f64 {
    assert!(k >= 1, "moment order must be >= 1");
    (0..k as i64)
        .map(|j| y.powi(j as i32) / (j as f64 + 1.0) * binom(k as i64, j) * binom(k as i64 - 1, j))
        .sum()
}

/// `int log(x) dF_y(x) = ((y-1)/y) log(1-y) - 1`, defined for 0 < y < 1.
pub fn mp_log_centering(y: f64) -> Result<f64> {
    if !(0.0 < y && y < 1.0) {
        return Err(Error::Domain(format!(
            "log-determinant centering needs y in (0,1), got y = {y}"
        )));
    }
    Ok((y - 1.0) / y * (1.0 - y).ln() - 1.0)
}

/// Centering for `tr(M^k)` of a p-dimensional correlation-type matrix:
/// `p * int x^k dF_{y_n}`.
pub fn power_centering(y_n: f64, p: usize, k: u32) -> f64 {
    p as f64 * mp_moment(y_n, k)
}
