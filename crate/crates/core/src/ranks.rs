//! Column ranking, rank standardization and pairwise sign vectors.
//!
//! Ranks are the entry point for every rank-based correlation matrix in this
//! crate. Under the theory's assumptions the data are absolutely continuous,
//! so ties occur with probability zero; the `Strict` policy turns a tie into
//! an error instead of silently computing a statistic the theory does not
//! cover, while `RandomBreak` resolves ties by a seeded random perturbation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// How tied column values are handled during ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Fail with [`Error::Tie`] on any duplicate value within a column.
    Strict,
    /// Break ties uniformly at random, deterministically in the seed.
    RandomBreak { seed: u64 },
}

/// Columnwise ranks: each column is a permutation of 1..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    ranks: DMatrix<u32>,
}

impl RankMatrix {
    /// Wrap an existing rank matrix, checking that every column is a
    /// permutation of 1..=n.
    pub fn from_ranks(ranks: DMatrix<u32>) -> Result<Self> {
        let n = ranks.nrows();
        for col in 0..ranks.ncols() {
            let mut seen = vec![false; n];
            for row in 0..n {
                let r = ranks[(row, col)] as usize;
                if r < 1 || r > n || seen[r - 1] {
                    return Err(Error::Parse {
                        row,
                        col,
                        msg: format!("rank {} is not part of a permutation of 1..={}", r, n),
                    });
                }
                seen[r - 1] = true;
            }
        }
        Ok(Self { ranks })
    }

    pub fn n(&self) -> usize {
        self.ranks.nrows()
    }

    pub fn p(&self) -> usize {
        self.ranks.ncols()
    }

    pub fn ranks(&self) -> &DMatrix<u32> {
        &self.ranks
    }

    pub fn rank(&self, row: usize, col: usize) -> u32 {
        self.ranks[(row, col)]
    }
}

/// Centered and scaled ranks: column j holds
/// `sqrt(12/(n^2-1)) * (r_ij - (n+1)/2)`, so every column sums to zero and
/// has squared norm n.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedRankMatrix {
    s: DMatrix<f64>,
}

impl StandardizedRankMatrix {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn p(&self) -> usize {
        self.s.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }
}

/// Rank every column of `data`; the smallest value gets rank 1.
///
/// Runs in O(n log n) per column via argsort. With `TiePolicy::Strict`
/// duplicate values within a column are an error; with `RandomBreak` tied
/// entries are ordered by a seeded uniform draw.
pub fn rank_columns(data: &DataMatrix, policy: TiePolicy) -> Result<RankMatrix> {
    let n = data.n();
    let p = data.p();
    let mut ranks = DMatrix::<u32>::zeros(n, p);
    let mut jitter_rng = match policy {
        TiePolicy::RandomBreak { seed } => Some(ChaCha12Rng::seed_from_u64(seed)),
        TiePolicy::Strict => None,
    };
    let mut idx: Vec<usize> = Vec::with_capacity(n);
    for col in 0..p {
        let column = data.values().column(col);
        idx.clear();
        idx.extend(0..n);
        match &mut jitter_rng {
            None => {
                idx.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).unwrap());
                for w in idx.windows(2) {
                    if column[w[0]] == column[w[1]] {
                        return Err(Error::Tie { col, row_a: w[0], row_b: w[1] });
                    }
                }
            }
            Some(rng) => {
                // Sorting on (value, uniform key) is the rank-space image of
                // jittering tied entries by a seeded uniform perturbation.
                let keys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                idx.sort_by(|&a, &b| {
                    column[a]
                        .partial_cmp(&column[b])
                        .unwrap()
                        .then(keys[a].partial_cmp(&keys[b]).unwrap())
                });
            }
        }
        for (r, &row) in idx.iter().enumerate() {
            ranks[(row, col)] = (r + 1) as u32;
        }
    }
    RankMatrix::from_ranks(ranks)
}

/// Map ranks to standardized ranks: `s = sqrt(12/(n^2-1)) * (r - (n+1)/2)`.
pub fn standardize_ranks(ranks: &RankMatrix) -> Result<StandardizedRankMatrix> {
    let n = ranks.n();
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    let nf = n as f64;
    let scale = (12.0 / (nf * nf - 1.0)).sqrt();
    let center = (nf + 1.0) / 2.0;
    let s = DMatrix::from_fn(n, ranks.p(), |i, j| scale * (ranks.rank(i, j) as f64 - center));
    Ok(StandardizedRankMatrix { s })
}

/// Componentwise sign of `xi - xj`.
pub fn sign_vector(xi: &[f64], xj: &[f64]) -> Result<Vec<i8>> {
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch { expected: xi.len(), got: xj.len() });
    }
    Ok(xi
        .iter()
        .zip(xj)
        .map(|(a, b)| {
            if a > b {
                1
            } else if a < b {
                -1
            } else {
                0
            }
        })
        .collect())
}
