//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by matrix construction, spectral routines and the
/// asymptotic-moment machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A column contains tied values under the `Strict` tie policy.
    #[error("tied values in column {col} (rows {row_a} and {row_b}); the theory assumes absolutely continuous data — use RandomBreak to jitter ties")]
    Tie { col: usize, row_a: usize, row_b: usize },

    /// A non-finite entry was found in the input.
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    /// Two matrices (or vectors) that must share a dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Requested brute-force enumeration over n! permutations for n too large.
    #[error("enumeration over {n}! permutations refused (max n = {max})")]
    SizeTooLarge { n: usize, max: usize },

    /// Fewer samples than an estimator requires.
    #[error("sample size {n} too small (need n >= {min})")]
    SampleTooSmall { n: usize, min: usize },

    /// A column is constant, so Pearson correlation is undefined.
    #[error("column {col} has zero variance")]
    ZeroVariance { col: usize },

    /// The symmetric eigensolver failed to converge.
    #[error("eigendecomposition failed to converge")]
    ConvergenceFailure,

    /// Log-determinant of a singular (or numerically singular) matrix.
    #[error("matrix is singular: smallest eigenvalue {min_eig:e} not positive")]
    SingularMatrix { min_eig: f64 },

    /// Stieltjes transform evaluated at an eigenvalue.
    #[error("evaluation point coincides with an eigenvalue ({value})")]
    Pole { value: f64 },

    /// Stieltjes transform evaluated inside the closed spectral support.
    #[error("point {re}+{im}i lies inside the limiting support [{lo}, {hi}]")]
    Support { re: f64, im: f64, lo: f64, hi: f64 },

    /// Stieltjes transform evaluated at the origin.
    #[error("Stieltjes transform undefined at z = 0")]
    Zero,

    /// A quantity is undefined for the requested aspect ratio.
    #[error("domain error: {0}")]
    Domain(String),

    /// The two-point covariance kernel was called with coincident arguments.
    #[error("covariance kernel requires distinct points, got |z1 - z2| = {sep:e}")]
    CoincidentPoints { sep: f64 },

    /// Contour quadrature did not reach the requested tolerance.
    #[error("quadrature failed to converge: last refinement changed the estimate by {last_delta:e} with {nodes} nodes per edge")]
    QuadratureFailure { last_delta: f64, nodes: usize },

    /// Malformed tabular input.
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    /// Underlying I/O failure.
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
