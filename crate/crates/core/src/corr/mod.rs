//! Correlation-type matrices built from ranks and signs.
//!
//! Five constructions share one container: Spearman's rank correlation, its
//! Gram companion, Kendall's rank correlation, the improved (order-3
//! U-statistic) Spearman matrix, and Pearson's correlation as the classical
//! baseline. The improved Spearman matrix is always derived from the exact
//! decomposition `(n+1) rho = 3 K + (n-2) rho~`, never from the O(n^3)
//! triple sum, which is kept only as a reference path.

mod kendall;

pub use kendall::{kendall_matrix, kendall_matrix_naive};

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::ranks::{rank_columns, standardize_ranks, RankMatrix, StandardizedRankMatrix, TiePolicy};

/// Which construction produced a [`SymmetricMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum MatrixKind {
    Spearman,
    ImprovedSpearman,
    Kendall,
    Pearson,
    Gram,
}

/// A dense symmetric matrix tagged with its construction and the sample
/// shape (n, p) of the data it came from.
///
/// Symmetry is enforced exactly: the upper triangle is authoritative and the
/// lower triangle is mirrored from it. Correlation kinds carry an exact unit
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    matrix: DMatrix<f64>,
    kind: MatrixKind,
    n: usize,
    p: usize,
}

impl SymmetricMatrix {
    fn from_upper(mut matrix: DMatrix<f64>, kind: MatrixKind, n: usize, p: usize) -> Self {
        let d = matrix.nrows();
        debug_assert_eq!(d, matrix.ncols());
        for i in 0..d {
            for j in (i + 1)..d {
                matrix[(j, i)] = matrix[(i, j)];
            }
        }
        Self { matrix, kind, n, p }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Sample count of the originating data.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Feature count of the originating data.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// tr(M^2), which for a symmetric matrix is the squared Frobenius norm.
    pub fn trace_square(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum()
    }

    /// Largest |entry| off the diagonal.
    pub fn max_abs_offdiag(&self) -> f64 {
        let d = self.dim();
        let mut best = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                best = best.max(self.matrix[(i, j)].abs());
            }
        }
        best
    }

    /// Log-determinant through a Cholesky factorization. Fails when the
    /// matrix is not numerically positive definite.
    pub fn log_det_cholesky(&self) -> Result<f64> {
        let chol = nalgebra::Cholesky::new(self.matrix.clone())
            .ok_or(Error::SingularMatrix { min_eig: f64::NAN })?;
        let l = chol.l_dirty();
        Ok(2.0 * (0..self.dim()).map(|i| l[(i, i)].ln()).sum::<f64>())
    }
}

/// Ranks and standardized ranks of a data matrix, computed once and shared
/// by the constructors below.
#[derive(Debug, Clone)]
pub struct RankedData {
    ranks: RankMatrix,
    standardized: StandardizedRankMatrix,
}

impl RankedData {
    pub fn new(data: &DataMatrix, policy: TiePolicy) -> Result<Self> {
        let ranks = rank_columns(data, policy)?;
        let standardized = standardize_ranks(&ranks)?;
        Ok(Self { ranks, standardized })
    }

    pub fn n(&self) -> usize {
        self.ranks.n()
    }

    pub fn p(&self) -> usize {
        self.ranks.p()
    }

    pub fn ranks(&self) -> &RankMatrix {
        &self.ranks
    }

    pub fn standardized(&self) -> &StandardizedRankMatrix {
        &self.standardized
    }

    /// Spearman's rank correlation matrix `(1/n) S' S` (p x p).
    pub fn spearman(&self) -> SymmetricMatrix {
        let s = self.standardized.matrix();
        let mut m = s.transpose() * s;
        m /= self.n() as f64;
        m.fill_diagonal(1.0);
        SymmetricMatrix::from_upper(m, MatrixKind::Spearman, self.n(), self.p())
    }

    /// Gram matrix `(1/p) S S'` (n x n); shares its nonzero spectrum with
    /// `spearman() / y_n` and annihilates the all-ones vector.
    pub fn gram(&self) -> SymmetricMatrix {
        let s = self.standardized.matrix();
        let mut m = s * s.transpose();
        m /= self.p() as f64;
        SymmetricMatrix::from_upper(m, MatrixKind::Gram, self.n(), self.p())
    }

    /// Kendall's rank correlation matrix (p x p), inversion-counting path.
    pub fn kendall(&self) -> SymmetricMatrix {
        let m = kendall_matrix(&self.ranks);
        SymmetricMatrix::from_upper(m, MatrixKind::Kendall, self.n(), self.p())
    }

    /// The improved Spearman matrix `rho~ = ((n+1) rho - 3 K) / (n-2)`.
    pub fn improved_spearman(&self) -> Result<SymmetricMatrix> {
        let rho = self.spearman();
        let k = self.kendall();
        improved_from_parts(&rho, &k)
    }
}

/// Combine already-built Spearman and Kendall matrices through the exact
/// decomposition identity.
pub fn improved_from_parts(rho: &SymmetricMatrix, k: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if rho.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: k.dim() });
    }
    let n = rho.n();
    if n < 3 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    let nf = n as f64;
    let m = (rho.matrix() * (nf + 1.0) - k.matrix() * 3.0) / (nf - 2.0);
    Ok(SymmetricMatrix::from_upper(m, MatrixKind::ImprovedSpearman, n, rho.p()))
}

/// Spearman's rank correlation matrix of `data`.
pub fn spearman(data: &DataMatrix, policy: TiePolicy) -> Result<SymmetricMatrix> {
    Ok(RankedData::new(data, policy)?.spearman())
}

/// Gram matrix of the standardized ranks of `data`.
pub fn gram(data: &DataMatrix, policy: TiePolicy) -> Result<SymmetricMatrix> {
    Ok(RankedData::new(data, policy)?.gram())
}

/// Kendall's rank correlation matrix of `data` (O(n log n) per pair).
pub fn kendall(data: &DataMatrix, policy: TiePolicy) -> Result<SymmetricMatrix> {
    Ok(RankedData::new(data, policy)?.kendall())
}

/// The improved Spearman rank correlation matrix of `data`.
pub fn improved_spearman(data: &DataMatrix, policy: TiePolicy) -> Result<SymmetricMatrix> {
    RankedData::new(data, policy)?.improved_spearman()
}

/// Pearson's sample correlation matrix of `data`.
pub fn pearson(data: &DataMatrix) -> Result<SymmetricMatrix> {
    let n = data.n();
    let p = data.p();
    let x = data.values();
    let mut centered = DMatrix::<f64>::zeros(n, p);
    for j in 0..p {
        let col = x.column(j);
        let mean = col.sum() / n as f64;
        let mut norm_sq = 0.0;
        for i in 0..n {
            let v = col[i] - mean;
            centered[(i, j)] = v;
            norm_sq += v * v;
        }
        if norm_sq == 0.0 {
            return Err(Error::ZeroVariance { col: j });
        }
        let inv = norm_sq.sqrt().recip();
        for i in 0..n {
            centered[(i, j)] *= inv;
        }
    }
    let mut m = centered.transpose() * &centered;
    m.fill_diagonal(1.0);
    Ok(SymmetricMatrix::from_upper(m, MatrixKind::Pearson, n, p))
}

/// Reference O(n^3) evaluation of the improved Spearman matrix as the
/// order-3 U-statistic `3/(n(n-1)(n-2)) * sum over distinct (i,j,k) of
/// sign(X_i - X_j) sign(X_i - X_k)'`. Only usable at small n.
pub fn improved_spearman_naive(data: &DataMatrix) -> Result<SymmetricMatrix> {
    let n = data.n();
    let p = data.p();
    if n < 3 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    if n > 32 {
        return Err(Error::SizeTooLarge { n, max: 32 });
    }
    let x = data.values();
    let sign = |i: usize, j: usize, c: usize| -> f64 { (x[(i, c)] - x[(j, c)]).signum() };
    let mut m = DMatrix::<f64>::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    for k in 0..n {
                        if k == i || k == j {
                            continue;
                        }
                        sum += sign(i, j, a) * sign(i, k, b);
                    }
                }
            }
            let nf = n as f64;
            m[(a, b)] = 3.0 * sum / (nf * (nf - 1.0) * (nf - 2.0));
        }
    }
    Ok(SymmetricMatrix::from_upper(m, MatrixKind::ImprovedSpearman, n, p))
}
