//! Observation matrices: rows are samples, columns are features.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An n x p real data matrix with n samples of p features.
///
/// Constructors reject non-finite entries and fewer than three samples
/// (the order-3 U-statistic behind the improved Spearman matrix needs
/// n >= 3).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 3 {
            return Err(Error::SampleTooSmall { n: values.nrows(), min: 3 });
        }
        if values.ncols() < 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { values })
    }

    /// Build from a row-major slice of length `n * p`.
    pub fn from_rows(n: usize, p: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * p {
            return Err(Error::DimensionMismatch { expected: n * p, got: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(n, p, entries))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    /// Finite-sample aspect ratio y_n = p/n.
    pub fn aspect_ratio(&self) -> f64 {
        self.p() as f64 / self.n() as f64
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Apply a function entrywise to a single column, revalidating the result.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values = self.values.clone();
        for row in 0..values.nrows() {
            values[(row, j)] = f(values[(row, j)]);
        }
        Self::new(values)
    }
}
