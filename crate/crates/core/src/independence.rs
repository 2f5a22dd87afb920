//! Test statistics and decisions for mutual independence of the features.
//!
//! Four tests carry analytic calibration from the CLT of linear spectral
//! statistics: the squared-Frobenius and log-determinant statistics of the
//! Spearman and improved Spearman matrices. The l2 tests reject on the upper
//! tail, the log-determinant tests on the lower tail, exactly as the
//! rejection regions prescribe. Eight comparison statistics (max-type,
//! Kendall and Pearson analogues) ship without analytic thresholds and are
//! calibrated by Monte Carlo.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::corr::{improved_from_parts, pearson, RankedData, SymmetricMatrix};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::mp::{clt_closed_form, LssFamily, Variant};
use crate::ranks::TiePolicy;

/// Identifier of a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    /// tr(rho^2), analytic upper-tail test.
    RhoL2,
    /// log|rho|, analytic lower-tail test.
    RhoLog,
    /// tr(rho~^2), analytic upper-tail test.
    IrhoL2,
    /// log|rho~|, analytic lower-tail test.
    IrhoLog,
    /// max off-diagonal |rho_ab|.
    RhoMax,
    /// max off-diagonal |rho~_ab|.
    IrhoMax,
    /// tr(K^2).
    KL2,
    /// log|K|.
    KLog,
    /// max off-diagonal |K_ab|.
    KMax,
    /// tr(R^2) for Pearson's R.
    RL2,
    /// log|R|.
    RLog,
    /// max off-diagonal |R_ab|.
    RMax,
}

impl TestId {
    pub const ALL: [TestId; 12] = [
        TestId::RhoL2,
        TestId::RhoLog,
        TestId::IrhoL2,
        TestId::IrhoLog,
        TestId::RhoMax,
        TestId::IrhoMax,
        TestId::KL2,
        TestId::KLog,
        TestId::KMax,
        TestId::RL2,
        TestId::RLog,
        TestId::RMax,
    ];

    /// The four tests with analytic (CLT-based) calibration.
    pub const ANALYTIC: [TestId; 4] =
        [TestId::RhoL2, TestId::RhoLog, TestId::IrhoL2, TestId::IrhoLog];

    pub fn is_analytic(self) -> bool {
        TestId::ANALYTIC.contains(&self)
    }

    /// Dependence pushes log-determinants down and everything else up.
    pub fn lower_tail(self) -> bool {
        matches!(self, TestId::RhoLog | TestId::IrhoLog | TestId::KLog | TestId::RLog)
    }

    /// Rank-based statistics are distribution-free under continuous
    /// marginals; Pearson's are not.
    pub fn rank_based(self) -> bool {
        !matches!(self, TestId::RL2 | TestId::RLog | TestId::RMax)
    }

    pub fn name(self) -> &'static str {
        match self {
            TestId::RhoL2 => "rho_l2",
            TestId::RhoLog => "rho_log",
            TestId::IrhoL2 => "irho_l2",
            TestId::IrhoLog => "irho_log",
            TestId::RhoMax => "rho_max",
            TestId::IrhoMax => "irho_max",
            TestId::KL2 => "k_l2",
            TestId::KLog => "k_log",
            TestId::KMax => "k_max",
            TestId::RL2 => "r_l2",
            TestId::RLog => "r_log",
            TestId::RMax => "r_max",
        }
    }

    pub fn parse(name: &str) -> Option<TestId> {
        TestId::ALL.into_iter().find(|t| t.name() == name)
    }
}

/// How a decision threshold was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Calibration {
    Analytic,
    MonteCarlo { reps: usize, seed: u64 },
}

/// Outcome of one test on one data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_id: TestId,
    pub statistic: f64,
    pub centered: f64,
    pub z_score: Option<f64>,
    pub p_value: Option<f64>,
    pub reject: bool,
    pub alpha: f64,
    pub n: usize,
    pub p: usize,
    pub y_n: f64,
    pub calibration: Calibration,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Upper-alpha quantile of the standard normal.
pub fn normal_upper_quantile(alpha: f64) -> f64 {
    std_normal().inverse_cdf(1.0 - alpha)
}

fn analytic_report(
    test_id: TestId,
    statistic: f64,
    centered: f64,
    mean: f64,
    sd: f64,
    alpha: f64,
    n: usize,
    p: usize,
) -> TestReport {
    let z = (centered - mean) / sd;
    let normal = std_normal();
    let p_value = if test_id.lower_tail() { normal.cdf(z) } else { 1.0 - normal.cdf(z) };
    TestReport {
        test_id,
        statistic,
        centered,
        z_score: Some(z),
        p_value: Some(p_value),
        reject: p_value < alpha,
        alpha,
        n,
        p,
        y_n: p as f64 / n as f64,
        calibration: Calibration::Analytic,
    }
}

/// Asymptotic (mean, sd) of the centered statistic under independence at
/// finite-sample ratio y_n, for the four analytically calibrated tests.
pub fn analytic_null_moments(test_id: TestId, y_n: f64) -> Result<(f64, f64)> {
    let (family, variant) = match test_id {
        TestId::RhoL2 => (LssFamily::Power(2), Variant::Classical),
        TestId::IrhoL2 => (LssFamily::Power(2), Variant::Improved),
        TestId::RhoLog => (LssFamily::Log, Variant::Classical),
        TestId::IrhoLog => (LssFamily::Log, Variant::Improved),
        _ => {
            return Err(Error::Domain(format!(
                "{} has no analytic calibration",
                test_id.name()
            )))
        }
    };
    let m = clt_closed_form(family, y_n, variant)?;
    Ok((m.mean, m.sd()))
}

fn l2_report(test_id: TestId, m: &SymmetricMatrix, alpha: f64) -> Result<TestReport> {
    let (n, p) = (m.n(), m.p());
    let (nf, pf) = (n as f64, p as f64);
    let statistic = m.trace_square();
    let centered = statistic - pf * pf / nf - pf;
    let (mean, sd) = analytic_null_moments(test_id, pf / nf)?;
    Ok(analytic_report(test_id, statistic, centered, mean, sd, alpha, n, p))
}

fn log_report(test_id: TestId, m: &SymmetricMatrix, alpha: f64) -> Result<TestReport> {
    let (n, p) = (m.n(), m.p());
    if p >= n {
        return Err(Error::Domain(format!(
            "{} needs p < n (y_n < 1): log-determinant centering is undefined at y_n = {p}/{n}",
            test_id.name()
        )));
    }
    let (nf, pf) = (n as f64, p as f64);
    let y_n = pf / nf;
    let statistic = m.log_det_cholesky()?;
    let centered = statistic + (nf - pf) * (1.0 - y_n).ln() + pf;
    let (mean, sd) = analytic_null_moments(test_id, y_n)?;
    Ok(analytic_report(test_id, statistic, centered, mean, sd, alpha, n, p))
}

/// Upper-tail test on tr(rho^2).
pub fn test_rho_l2(data: &DataMatrix, alpha: f64, policy: TiePolicy) -> Result<TestReport> {
    let ranked = RankedData::new(data, policy)?;
    l2_report(TestId::RhoL2, &ranked.spearman(), alpha)
}

/// Lower-tail test on log|rho|; requires p < n.
pub fn test_rho_log(data: &DataMatrix, alpha: f64, policy: TiePolicy) -> Result<TestReport> {
    let ranked = RankedData::new(data, policy)?;
    log_report(TestId::RhoLog, &ranked.spearman(), alpha)
}

/// Upper-tail test on tr(rho~^2).
pub fn test_irho_l2(data: &DataMatrix, alpha: f64, policy: TiePolicy) -> Result<TestReport> {
    let ranked = RankedData::new(data, policy)?;
    l2_report(TestId::IrhoL2, &ranked.improved_spearman()?, alpha)
}

/// Lower-tail test on log|rho~|; requires p < n.
pub fn test_irho_log(data: &DataMatrix, alpha: f64, policy: TiePolicy) -> Result<TestReport> {
    let ranked = RankedData::new(data, policy)?;
    log_report(TestId::IrhoLog, &ranked.improved_spearman()?, alpha)
}

/// Raw value of any statistic, without calibration.
pub fn statistic_only(data: &DataMatrix, test_id: TestId, policy: TiePolicy) -> Result<f64> {
    StatisticBatch::new(data, policy).value(test_id)
}

/// Computes requested statistics off one ranking, caching intermediate
/// matrices so a batch of tests shares the expensive pieces.
pub struct StatisticBatch<'a> {
    data: &'a DataMatrix,
    policy: TiePolicy,
    ranked: Option<RankedData>,
    spearman: Option<SymmetricMatrix>,
    kendall: Option<SymmetricMatrix>,
    improved: Option<SymmetricMatrix>,
    pearson: Option<SymmetricMatrix>,
}

impl<'a> StatisticBatch<'a> {
    pub fn new(data: &'a DataMatrix, policy: TiePolicy) -> Self {
        Self {
            data,
            policy,
            ranked: None,
            spearman: None,
            kendall: None,
            improved: None,
            pearson: None,
        }
    }

    fn ranked(&mut self) -> Result<&RankedData> {
        if self.ranked.is_none() {
            self.ranked = Some(RankedData::new(self.data, self.policy)?);
        }
        Ok(self.ranked.as_ref().unwrap())
    }

    fn spearman(&mut self) -> Result<&SymmetricMatrix> {
        if self.spearman.is_none() {
            let m = self.ranked()?.spearman();
            self.spearman = Some(m);
        }
        Ok(self.spearman.as_ref().unwrap())
    }

    fn kendall(&mut self) -> Result<&SymmetricMatrix> {
        if self.kendall.is_none() {
            let m = self.ranked()?.kendall();
            self.kendall = Some(m);
        }
        Ok(self.kendall.as_ref().unwrap())
    }

    fn improved(&mut self) -> Result<&SymmetricMatrix> {
        if self.improved.is_none() {
            self.spearman()?;
            self.kendall()?;
            let m = improved_from_parts(
                self.spearman.as_ref().unwrap(),
                self.kendall.as_ref().unwrap(),
            )?;
            self.improved = Some(m);
        }
        Ok(self.improved.as_ref().unwrap())
    }

    fn pearson(&mut self) -> Result<&SymmetricMatrix> {
        if self.pearson.is_none() {
            self.pearson = Some(pearson(self.data)?);
        }
        Ok(self.pearson.as_ref().unwrap())
    }

    fn log_det(m: &SymmetricMatrix, what: &str) -> Result<f64> {
        if m.p() >= m.n() {
            return Err(Error::Domain(format!(
                "{what} needs p < n, got p = {} >= n = {}",
                m.p(),
                m.n()
            )));
        }
        m.log_det_cholesky()
    }

    /// The raw value of one statistic.
    pub fn value(&mut self, test_id: TestId) -> Result<f64> {
        match test_id {
            TestId::RhoL2 => Ok(self.spearman()?.trace_square()),
            TestId::RhoLog => Self::log_det(self.spearman()?, "rho_log"),
            TestId::IrhoL2 => Ok(self.improved()?.trace_square()),
            TestId::IrhoLog => Self::log_det(self.improved()?, "irho_log"),
            TestId::RhoMax => Ok(self.spearman()?.max_abs_offdiag()),
            TestId::IrhoMax => Ok(self.improved()?.max_abs_offdiag()),
            TestId::KL2 => Ok(self.kendall()?.trace_square()),
            TestId::KLog => Self::log_det(self.kendall()?, "k_log"),
            TestId::KMax => Ok(self.kendall()?.max_abs_offdiag()),
            TestId::RL2 => Ok(self.pearson()?.trace_square()),
            TestId::RLog => Self::log_det(self.pearson()?, "r_log"),
            TestId::RMax => Ok(self.pearson()?.max_abs_offdiag()),
        }
    }

    /// Analytic test report for one of the four calibrated statistics.
    pub fn analytic_report(&mut self, test_id: TestId, alpha: f64) -> Result<TestReport> {
        match test_id {
            TestId::RhoL2 => l2_report(test_id, self.spearman()?, alpha),
            TestId::IrhoL2 => l2_report(test_id, self.improved()?, alpha),
            TestId::RhoLog => log_report(test_id, self.spearman()?, alpha),
            TestId::IrhoLog => log_report(test_id, self.improved()?, alpha),
            _ => Err(Error::Domain(format!("{} has no analytic calibration", test_id.name()))),
        }
    }
}

/// Monte Carlo critical value of a statistic under a null model: the
/// empirical (1-alpha) quantile for upper-tail statistics, the alpha
/// quantile for lower-tail ones. Deterministic in the seed.
pub fn mc_calibrate(
    test_id: TestId,
    n: usize,
    p: usize,
    null_model: crate::sim::NullModel,
    reps: usize,
    seed: u64,
    alpha: f64,
) -> Result<f64> {
    if reps < 200 {
        return Err(Error::Domain(format!("calibration needs reps >= 200, got {reps}")));
    }
    let mut values = crate::sim::null_statistic_sample(test_id, n, p, null_model, reps, seed)?;
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = if test_id.lower_tail() { alpha } else { 1.0 - alpha };
    Ok(empirical_quantile(&values, q))
}

/// Type-7 empirical quantile (linear interpolation between order
/// statistics) of an ascending-sorted sample.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0);
    let h = (n as f64 - 1.0) * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Decision for an MC-calibrated statistic at a given critical value.
pub fn mc_report(
    test_id: TestId,
    statistic: f64,
    critical: f64,
    alpha: f64,
    n: usize,
    p: usize,
    calibration: Calibration,
) -> TestReport {
    let reject = if test_id.lower_tail() { statistic < critical } else { statistic > critical };
    TestReport {
        test_id,
        statistic,
        centered: statistic,
        z_score: None,
        p_value: None,
        reject,
        alpha,
        n,
        p,
        y_n: p as f64 / n as f64,
        calibration,
    }
}
