//! Closed-form asymptotic moments for log and power linear spectral
//! statistics of the classical and improved rank correlation matrices.
//!
//! For `f = log` (0 < y < 1):
//!
//! ```text
//! mean_classical = (3/2) log(1-y) + 2y
//! mean_improved  = mean_classical - y^2/(1-y)
//! variance       = -2 log(1-y) - 2y
//! ```
//!
//! For `f = x^k` (k >= 2) the mean and variance are finite binomial sums in
//! y; k = 1 is degenerate with mean and variance both zero because the trace
//! of a correlation matrix is constant. The improved variant shifts the mean
//! only; the variance is shared.

use serde::{Deserialize, Serialize};

use super::binom;
use crate::error::{Error, Result};

/// Statistic family for the asymptotic moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LssFamily {
    Log,
    Power(u32),
}

/// Classical Spearman matrix vs the improved (order-3 U-statistic) variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Classical,
    Improved,
}

/// Asymptotic mean and variance of a centered linear spectral statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltMoments {
    pub family: LssFamily,
    pub variant: Variant,
    pub y: f64,
    pub mean: f64,
    pub variance: f64,
}

impl CltMoments {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn log_moments(y: f64, variant: Variant) -> Result<(f64, f64)> {
    if !(0.0 < y && y < 1.0) {
        return Err(Error::Domain(format!(
            "log-determinant statistics need y in (0,1), got y = {y}"
        )));
    }
    let base = 1.5 * (1.0 - y).ln() + 2.0 * y;
    let mean = match variant {
        Variant::Classical => base,
        Variant::Improved => base - y * y / (1.0 - y),
    };
    let variance = -2.0 * (1.0 - y).ln() - 2.0 * y;
    Ok((mean, variance))
}

fn power_mean_classical(y: f64, k: u32) -> f64 {
    let ki = k as i64;
    let r = y.sqrt();
    let edge = 0.25 * ((1.0 - r).powi(2 * k as i32) + (1.0 + r).powi(2 * k as i32));
    let central: f64 = (0..=ki)
        .map(|j| {
            let c = binom(ki, j);
            c * c * y.powi((ki - j) as i32)
        })
        .sum();
    let sum1: f64 = (0..=ki)
        .map(|j| binom(ki, j) * (y - 1.0).powi(j as i32) * binom(2 * ki - j, ki - 2))
        .sum();
    let sum2: f64 = (0..=ki)
        .map(|j| binom(ki, j) * (y - 1.0).powi(j as i32) * binom(2 * ki - j - 1, ki - 2))
        .sum();
    edge - 0.5 * central - 2.0 / y * sum1 + sum2
}

fn power_mean_improved_shift(y: f64, k: u32) -> f64 {
    let ki = k as i64;
    let drop: f64 = (0..ki)
        .map(|j| binom(ki, j) * (y - 1.0).powi(j as i32) * binom(2 * ki - j - 2, ki - 1))
        .sum();
    let add: f64 = (0..=ki)
        .map(|j| binom(ki, j) * (y - 1.0).powi(j as i32) * binom(2 * ki - j, ki - 1))
        .sum();
    add - drop
}

fn power_variance(y: f64, k: u32) -> f64 {
    let ki = k as i64;
    let mut first = 0.0;
    for j1 in 0..ki {
        for j2 in 0..=ki {
            let inner: f64 = (1..=(ki - j1))
                .map(|l| {
                    l as f64
                        * binom(2 * ki - 1 - (j1 + l), ki - 1)
                        * binom(2 * ki - 1 - j2 + l, ki - 1)
                })
                .sum();
            first += binom(ki, j1) * binom(ki, j2) * (y - 1.0).powi((j1 + j2) as i32) * inner;
        }
    }
    let mut second = 0.0;
    for j1 in 0..=ki {
        for j2 in 0..=ki {
            second += binom(ki, j1)
                * binom(ki, j2)
                * (y - 1.0).powi((j1 + j2) as i32)
                * binom(2 * ki - j1, ki - 1)
                * binom(2 * ki - j2, ki - 1);
        }
    }
    2.0 * first - 2.0 / y * second
}

/// Evaluate the closed-form asymptotic moments.
///
/// `Power(1)` is the degenerate trace statistic and returns (0, 0) for both
/// variants; `Log` requires 0 < y < 1.
pub fn clt_closed_form(family: LssFamily, y: f64, variant: Variant) -> Result<CltMoments> {
    if y <= 0.0 {
        return Err(Error::Domain(format!("aspect ratio must be positive, got {y}")));
    }
    let (mean, variance) = match family {
        LssFamily::Log => log_moments(y, variant)?,
        LssFamily::Power(0) => {
            return Err(Error::Domain("power exponent must be >= 1".into()));
        }
        LssFamily::Power(1) => (0.0, 0.0),
        LssFamily::Power(k) => {
            let mean = match variant {
                Variant::Classical => power_mean_classical(y, k),
                Variant::Improved => power_mean_classical(y, k) + power_mean_improved_shift(y, k),
            };
            (mean, power_variance(y, k))
        }
    };
    Ok(CltMoments { family, variant, y, mean, variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_reference_values() {
        let c = clt_closed_form(LssFamily::Log, 0.5, Variant::Classical).unwrap();
        assert_abs_diff_eq!(c.mean, 1.5 * 0.5f64.ln() + 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.mean, -0.0397207, epsilon = 1e-7);
        assert_abs_diff_eq!(c.variance, 0.3862944, epsilon = 1e-7);

        let i = clt_closed_form(LssFamily::Log, 0.5, Variant::Improved).unwrap();
        assert_abs_diff_eq!(i.mean, -0.5397207, epsilon = 1e-7);
        assert_abs_diff_eq!(i.variance, c.variance, epsilon = 0.0);
    }

    #[test]
    fn log_domain_errors() {
        assert!(clt_closed_form(LssFamily::Log, 1.0, Variant::Classical).is_err());
        assert!(clt_closed_form(LssFamily::Log, 2.0, Variant::Improved).is_err());
    }

    #[test]
    fn square_reduces_to_simple_polynomials() {
        for &y in &[0.2, 0.5, 0.8, 1.0, 2.0, 3.7] {
            let c = clt_closed_form(LssFamily::Power(2), y, Variant::Classical).unwrap();
            assert_abs_diff_eq!(c.mean, y * y - y, epsilon = 1e-10);
            assert_abs_diff_eq!(c.variance, 4.0 * y * y, epsilon = 1e-10);
            let i = clt_closed_form(LssFamily::Power(2), y, Variant::Improved).unwrap();
            assert_abs_diff_eq!(i.mean, 3.0 * y * y - y, epsilon = 1e-10);
            assert_abs_diff_eq!(i.variance, 4.0 * y * y, epsilon = 1e-10);
        }
    }

    #[test]
    fn linear_statistic_is_degenerate() {
        for &y in &[0.2, 1.0, 2.0] {
            for variant in [Variant::Classical, Variant::Improved] {
                let m = clt_closed_form(LssFamily::Power(1), y, variant).unwrap();
                assert_eq!(m.mean, 0.0);
                assert_eq!(m.variance, 0.0);
            }
        }
    }

    #[test]
    fn variances_positive_on_grid() {
        for &y in &[0.1, 0.2, 0.5, 0.8, 0.95] {
            let v = clt_closed_form(LssFamily::Log, y, Variant::Classical).unwrap().variance;
            assert!(v > 0.0, "sigma^2_log({y}) = {v}");
        }
        for k in 2..=6u32 {
            for &y in &[0.2, 0.5, 0.8, 1.0, 2.0] {
                let v = clt_closed_form(LssFamily::Power(k), y, Variant::Classical).unwrap().variance;
                assert!(v > 0.0, "sigma^2_x^{k}({y}) = {v}");
            }
        }
    }

    #[test]
    fn improved_shift_for_square_is_two_y_squared() {
        for &y in &[0.25, 0.5, 1.5] {
            assert_abs_diff_eq!(power_mean_improved_shift(y, 2), 2.0 * y * y, epsilon = 1e-12);
        }
    }
}
