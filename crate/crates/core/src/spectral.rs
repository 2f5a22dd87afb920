//! Eigenvalues, empirical spectral distributions, linear spectral statistics
//! and empirical Stieltjes transforms.

use num_complex::Complex64;

use crate::corr::{MatrixKind, SymmetricMatrix};
use crate::error::{Error, Result};

/// Eigenvalues below this magnitude count as zero for CDF purposes; the
/// log-determinant still refuses them.
const PSD_CLAMP: f64 = 1e-8;

/// Descending-sorted spectrum of a [`SymmetricMatrix`], tagged with its
/// source kind and the (n, p) shape of the originating data.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    source_kind: MatrixKind,
    n: usize,
    p: usize,
}

/// Function family for a linear spectral statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LssFunction {
    Log,
    Power(u32),
}

/// A linear spectral statistic: the plain sum over eigenvalues and the
/// 1/dim-normalized mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LssValue {
    pub f: LssFunction,
    /// `sum_i f(lambda_i)`
    pub sum: f64,
    /// `sum / dim`
    pub mean: f64,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn source_kind(&self) -> MatrixKind {
        self.source_kind
    }

    pub fn aspect(&self) -> (usize, usize) {
        (self.n, self.p)
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Empirical spectral CDF: the fraction of eigenvalues <= x, with the
    /// PSD rounding clamp applied to tiny negative values.
    pub fn esd_cdf(&self, x: f64) -> f64 {
        let count = self
            .eigenvalues
            .iter()
            .map(|&l| if l > -PSD_CLAMP && l < 0.0 { 0.0 } else { l })
            .filter(|&l| l <= x)
            .count();
        count as f64 / self.dim() as f64
    }

    /// Empirical Stieltjes transform `(1/dim) sum_i (lambda_i - z)^{-1}`.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        for &l in &self.eigenvalues {
            if z.im == 0.0 && z.re == l {
                return Err(Error::Pole { value: l });
            }
        }
        let sum: Complex64 = self.eigenvalues.iter().map(|&l| (Complex64::new(l, 0.0) - z).inv()).sum();
        Ok(sum / self.dim() as f64)
    }

    /// Evaluate a linear spectral statistic.
    pub fn lss(&self, f: LssFunction) -> Result<LssValue> {
        let sum = match f {
            LssFunction::Power(k) => {
                if k == 0 {
                    return Err(Error::Domain("power exponent must be >= 1".into()));
                }
                self.eigenvalues.iter().map(|&l| l.powi(k as i32)).sum::<f64>()
            }
            LssFunction::Log => {
                let min = self.smallest();
                if min <= 1e-12 {
                    return Err(Error::SingularMatrix { min_eig: min });
                }
                self.eigenvalues.iter().map(|&l| l.ln()).sum::<f64>()
            }
        };
        Ok(LssValue { f, sum, mean: sum / self.dim() as f64 })
    }
}

/// Full symmetric eigendecomposition, sorted descending.
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<Spectrum> {
    let eig = m
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::ConvergenceFailure)?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(Spectrum { eigenvalues: vals, source_kind: m.kind(), n: m.n(), p: m.p() })
}
