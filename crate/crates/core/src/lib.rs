//! Large-dimensional rank correlation matrices and their spectral statistics.
//!
//! The crate builds Spearman, improved Spearman, Kendall and Pearson
//! correlation matrices, computes eigenvalue statistics and their
//! Marchenko–Pastur-type limits, evaluates the asymptotic mean and variance
//! of linear spectral statistics (in closed form and by contour quadrature),
//! and wires those limits into one-sided independence tests with a Monte
//! Carlo harness for size/power studies.

pub mod corr;
pub mod data;
pub mod error;
pub mod independence;
pub mod mp;
pub mod quadform;
pub mod ranks;
pub mod sim;
pub mod spectral;

pub use corr::{MatrixKind, SymmetricMatrix};
pub use data::DataMatrix;
pub use error::{Error, Result};
pub use ranks::TiePolicy;
