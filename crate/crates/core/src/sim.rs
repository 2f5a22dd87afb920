//! Data generators and the Monte Carlo harness for size/power experiments.
//!
//! Replications are independent: replication r runs on a seed derived from
//! the master seed by a SplitMix64 counter, so any single replication can be
//! reproduced in isolation and the aggregate is independent of the degree of
//! parallelism.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::independence::{empirical_quantile, StatisticBatch, TestId};
use crate::ranks::TiePolicy;

/// Null (independent-feature) data models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullModel {
    /// i.i.d. standard normal entries.
    Normal,
    /// i.i.d. standard Cauchy entries (no moments).
    Cauchy,
    /// Columns 1..=floor(p/4) Cauchy(0,1), then up to floor(p/2) N(0,1),
    /// then chi^2(2).
    Mixed,
}

impl NullModel {
    pub fn name(self) -> &'static str {
        match self {
            NullModel::Normal => "normal",
            NullModel::Cauchy => "cauchy",
            NullModel::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(NullModel::Normal),
            "cauchy" => Some(NullModel::Cauchy),
            "mixed" => Some(NullModel::Mixed),
            _ => None,
        }
    }
}

/// Dependence structures layered on a null draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltKind {
    /// X = Z Sigma with Sigma the tridiagonal Toeplitz matrix
    /// (1 on the diagonal, rho on the first off-diagonals), multiplied as
    /// printed — not a symmetric square root.
    GlobalToeplitz { rho: f64 },
    /// Only the first two columns are mixed:
    /// X1 = Z1 + rho Z2, X2 = rho Z1 + Z2.
    LocalPair { rho: f64 },
}

/// Alternative model: a dependence structure over a base null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AltModel {
    pub kind: AltKind,
    pub base: NullModel,
}

/// Data model of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Null(NullModel),
    Alt(AltModel),
}

impl Model {
    pub fn base_null(&self) -> NullModel {
        match self {
            Model::Null(m) => *m,
            Model::Alt(a) => a.base,
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match self {
            Model::Null(_) => None,
            Model::Alt(a) => match a.kind {
                AltKind::GlobalToeplitz { rho } | AltKind::LocalPair { rho } => Some(rho),
            },
        }
    }

    /// Stable string form used in the CSV schema, e.g. `global_toeplitz:normal`.
    pub fn label(&self) -> String {
        match self {
            Model::Null(m) => m.name().to_string(),
            Model::Alt(a) => {
                let kind = match a.kind {
                    AltKind::GlobalToeplitz { .. } => "global_toeplitz",
                    AltKind::LocalPair { .. } => "local_pair",
                };
                format!("{kind}:{}", a.base.name())
            }
        }
    }

    /// Parse the CSV form back together with its rho column.
    pub fn from_label(label: &str, rho: Option<f64>) -> Option<Model> {
        if let Some(m) = NullModel::parse(label) {
            return Some(Model::Null(m));
        }
        let (kind, base) = label.split_once(':')?;
        let base = NullModel::parse(base)?;
        let rho = rho?;
        let kind = match kind {
            "global_toeplitz" => AltKind::GlobalToeplitz { rho },
            "local_pair" => AltKind::LocalPair { rho },
            _ => return None,
        };
        Some(Model::Alt(AltModel { kind, base }))
    }
}

/// SplitMix64 finalizer over (master, stream): the per-replication seed
/// derivation.
pub fn split_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream index reserved for Monte Carlo calibration draws, outside the
/// replication range.
const CALIBRATION_STREAM: u64 = 0x8000_0000_0000_0001;

fn draw_column(rng: &mut ChaCha12Rng, kind: NullModel, col: usize, p: usize, out: &mut [f64]) {
    // For Mixed the block boundaries are floor(p/4) and floor(p/2).
    let effective = match kind {
        NullModel::Mixed => {
            if col < p / 4 {
                NullModel::Cauchy
            } else if col < p / 2 {
                NullModel::Normal
            } else {
                // chi^2(2), handled below
                NullModel::Mixed
            }
        }
        other => other,
    };
    for v in out.iter_mut() {
        *v = match effective {
            NullModel::Normal => rng.sample(StandardNormal),
            NullModel::Cauchy => {
                // tan(pi (U - 1/2)) with U in (0, 1]
                let u: f64 = 1.0 - rng.gen::<f64>();
                (std::f64::consts::PI * (u - 0.5)).tan()
            }
            NullModel::Mixed => {
                // chi^2(2) = -2 ln U, U in (0, 1]
                let u: f64 = 1.0 - rng.gen::<f64>();
                -2.0 * u.ln()
            }
        };
    }
}

/// Draw an n x p matrix from a null model, deterministically in the seed.
pub fn gen_null(model: NullModel, n: usize, p: usize, seed: u64) -> Result<DataMatrix> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values = DMatrix::<f64>::zeros(n, p);
    let mut buf = vec![0.0; n];
    for j in 0..p {
        draw_column(&mut rng, model, j, p, &mut buf);
        for i in 0..n {
            values[(i, j)] = buf[i];
        }
    }
    DataMatrix::new(values)
}

/// Which factor multiplies the base draw in the global-correlation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToeplitzFactor {
    /// X = Z Sigma, exactly as the power tables were generated.
    AsPrinted,
    /// X = Z Sigma^{1/2}, the usual covariance factorization, kept as a
    /// sensitivity-study variant.
    SymmetricRoot,
}

/// Draw from an alternative model. The base draw uses the same seed as
/// [`gen_null`], so rho = 0 reproduces the null matrix bit for bit.
pub fn gen_alt(model: AltModel, n: usize, p: usize, seed: u64) -> Result<DataMatrix> {
    gen_alt_with(model, n, p, seed, ToeplitzFactor::AsPrinted)
}

/// [`gen_alt`] with an explicit Toeplitz factor convention.
pub fn gen_alt_with(
    model: AltModel,
    n: usize,
    p: usize,
    seed: u64,
    factor: ToeplitzFactor,
) -> Result<DataMatrix> {
    let z = gen_null(model.base, n, p, seed)?;
    match model.kind {
        AltKind::LocalPair { rho } => {
            if p < 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: p });
            }
            let zm = z.values();
            let mut x = zm.clone();
            for i in 0..n {
                x[(i, 0)] = zm[(i, 0)] + rho * zm[(i, 1)];
                x[(i, 1)] = rho * zm[(i, 0)] + zm[(i, 1)];
            }
            DataMatrix::new(x)
        }
        AltKind::GlobalToeplitz { rho } => {
            let zm = z.values();
            match factor {
                ToeplitzFactor::AsPrinted => {
                    // X[.,j] = Z[.,j] + rho Z[.,j-1] + rho Z[.,j+1]
                    let mut x = zm.clone();
                    for j in 0..p {
                        for i in 0..n {
                            let mut v = zm[(i, j)];
                            if j > 0 {
                                v += rho * zm[(i, j - 1)];
                            }
                            if j + 1 < p {
                                v += rho * zm[(i, j + 1)];
                            }
                            x[(i, j)] = v;
                        }
                    }
                    DataMatrix::new(x)
                }
                ToeplitzFactor::SymmetricRoot => {
                    let sigma = DMatrix::from_fn(p, p, |i, j| {
                        if i == j {
                            1.0
                        } else if i.abs_diff(j) == 1 {
                            rho
                        } else {
                            0.0
                        }
                    });
                    let eig = sigma.symmetric_eigen();
                    if eig.eigenvalues.min() < 0.0 {
                        return Err(Error::Domain(format!(
                            "Toeplitz correlation with rho = {rho} is not positive semidefinite"
                        )));
                    }
                    let mut root = eig.eigenvectors.clone();
                    for (k, col) in eig.eigenvalues.iter().enumerate() {
                        let s = col.max(0.0).sqrt();
                        root.column_mut(k).scale_mut(s);
                    }
                    let sqrt_sigma = &root * eig.eigenvectors.transpose();
                    DataMatrix::new(zm * sqrt_sigma)
                }
            }
        }
    }
}

fn gen_model(model: Model, n: usize, p: usize, seed: u64) -> Result<DataMatrix> {
    match model {
        Model::Null(m) => gen_null(m, n, p, seed),
        Model::Alt(a) => gen_alt(a, n, p, seed),
    }
}

/// Full description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    pub n: usize,
    pub p: usize,
    pub model: Model,
    pub tests: Vec<TestId>,
    pub reps: usize,
    pub alpha: f64,
    pub master_seed: u64,
    /// Thread count; `None` uses the global pool. Results do not depend on it.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Replications used to calibrate Monte Carlo critical values.
    #[serde(default = "default_calibration_reps")]
    pub calibration_reps: usize,
}

fn default_calibration_reps() -> usize {
    1000
}

impl ExperimentConfig {
    pub fn new(id: impl Into<String>, n: usize, p: usize, model: Model) -> Self {
        Self {
            id: id.into(),
            n,
            p,
            model,
            tests: TestId::ANALYTIC.to_vec(),
            reps: 1000,
            alpha: 0.05,
            master_seed: 20240501,
            parallelism: None,
            calibration_reps: 1000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::SampleTooSmall { n: self.n, min: 3 });
        }
        if self.reps < 1 {
            return Err(Error::Domain("reps must be >= 1".into()));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must be in (0,1), got {}", self.alpha)));
        }
        if matches!(self.model, Model::Alt(AltModel { kind: AltKind::LocalPair { .. }, .. }))
            && self.p < 2
        {
            return Err(Error::DimensionMismatch { expected: 2, got: self.p });
        }
        Ok(())
    }
}

/// Per-test aggregate over the replications. Tests whose centering is
/// undefined for the configured shape (log-determinants with p >= n) are
/// reported as not applicable, mirroring the "-" table cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub test_id: TestId,
    pub applicable: bool,
    pub reject_count: usize,
    pub reject_rate: Option<f64>,
    pub stat_mean: Option<f64>,
    pub stat_sd: Option<f64>,
    /// Monte Carlo critical value, when the test is MC-calibrated.
    pub critical_value: Option<f64>,
}

/// Result of one experiment: per-test summaries plus the config echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub tests: Vec<TestSummary>,
    pub seconds: f64,
}

fn log_like(test: TestId) -> bool {
    matches!(test, TestId::RhoLog | TestId::IrhoLog | TestId::KLog | TestId::RLog)
}

/// Statistic values of one test over `reps` independent null draws.
pub fn null_statistic_sample(
    test_id: TestId,
    n: usize,
    p: usize,
    model: NullModel,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let samples = null_statistic_samples(&[test_id], n, p, model, reps, seed)?;
    Ok(samples.into_iter().next().map(|(_, v)| v).unwrap())
}

/// Statistic values of several tests over shared null draws, keyed in the
/// order given.
pub fn null_statistic_samples(
    test_ids: &[TestId],
    n: usize,
    p: usize,
    model: NullModel,
    reps: usize,
    seed: u64,
) -> Result<Vec<(TestId, Vec<f64>)>> {
    let run_one = |r: usize| -> Result<Vec<f64>> {
        let data = gen_null(model, n, p, split_seed(seed, r as u64))?;
        let mut batch = StatisticBatch::new(&data, TiePolicy::Strict);
        test_ids.iter().map(|&t| batch.value(t)).collect()
    };
    #[cfg(feature = "parallel")]
    let per_rep: Result<Vec<Vec<f64>>> = (0..reps).into_par_iter().map(run_one).collect();
    #[cfg(not(feature = "parallel"))]
    let per_rep: Result<Vec<Vec<f64>>> = (0..reps).map(run_one).collect();
    let per_rep = per_rep?;
    Ok(test_ids
        .iter()
        .enumerate()
        .map(|(k, &t)| (t, per_rep.iter().map(|row| row[k]).collect()))
        .collect())
}

struct RepOutcome {
    /// One (statistic, reject) pair per applicable test, in test order.
    values: Vec<(f64, bool)>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_experiment_inner(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let (n, p, alpha) = (cfg.n, cfg.p, cfg.alpha);

    // Deterministic applicability: log statistics need p < n.
    let applicable: Vec<TestId> =
        cfg.tests.iter().copied().filter(|t| !log_like(*t) || p < n).collect();

    // Monte Carlo critical values for the non-analytic tests, from a
    // dedicated calibration stream under the base null model.
    let mc_tests: Vec<TestId> = applicable.iter().copied().filter(|t| !t.is_analytic()).collect();
    let mut criticals: BTreeMap<&'static str, f64> = BTreeMap::new();
    if !mc_tests.is_empty() {
        let cal_seed = split_seed(cfg.master_seed, CALIBRATION_STREAM);
        let samples = null_statistic_samples(
            &mc_tests,
            n,
            p,
            cfg.model.base_null(),
            cfg.calibration_reps,
            cal_seed,
        )?;
        for (t, mut values) in samples {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q = if t.lower_tail() { alpha } else { 1.0 - alpha };
            criticals.insert(t.name(), empirical_quantile(&values, q));
        }
    }

    let run_one = |r: usize| -> Result<RepOutcome> {
        let data = gen_model(cfg.model, n, p, split_seed(cfg.master_seed, r as u64))?;
        let mut batch = StatisticBatch::new(&data, TiePolicy::Strict);
        let mut values = Vec::with_capacity(applicable.len());
        for &t in &applicable {
            if t.is_analytic() {
                let report = batch.analytic_report(t, alpha)?;
                values.push((report.statistic, report.reject));
            } else {
                let stat = batch.value(t)?;
                let critical = criticals[t.name()];
                let reject = if t.lower_tail() { stat < critical } else { stat > critical };
                values.push((stat, reject));
            }
        }
        Ok(RepOutcome { values })
    };

    #[cfg(feature = "parallel")]
    let outcomes: Result<Vec<RepOutcome>> = (0..cfg.reps).into_par_iter().map(run_one).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Result<Vec<RepOutcome>> = (0..cfg.reps).map(run_one).collect();
    let outcomes = outcomes?;

    let mut tests = Vec::with_capacity(cfg.tests.len());
    for &t in &cfg.tests {
        if let Some(k) = applicable.iter().position(|&a| a == t) {
            let stats: Vec<f64> = outcomes.iter().map(|o| o.values[k].0).collect();
            let reject_count = outcomes.iter().filter(|o| o.values[k].1).count();
            let (mean, sd) = mean_sd(&stats);
            tests.push(TestSummary {
                test_id: t,
                applicable: true,
                reject_count,
                reject_rate: Some(reject_count as f64 / cfg.reps as f64),
                stat_mean: Some(mean),
                stat_sd: Some(sd),
                critical_value: criticals.get(t.name()).copied(),
            });
        } else {
            tests.push(TestSummary {
                test_id: t,
                applicable: false,
                reject_count: 0,
                reject_rate: None,
                stat_mean: None,
                stat_sd: None,
                critical_value: None,
            });
        }
    }

    Ok(ExperimentResult { config: cfg.clone(), tests, seconds: start.elapsed().as_secs_f64() })
}

/// Run an experiment. With `parallelism = Some(k)` the replications run on a
/// dedicated k-thread pool; the result is identical for any k.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    #[cfg(feature = "parallel")]
    if let Some(threads) = cfg.parallelism {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Domain(format!("failed to build thread pool: {e}")))?;
        return pool.install(|| run_experiment_inner(cfg));
    }
    run_experiment_inner(cfg)
}

/// Seed of the dedicated calibration stream for a given master seed.
pub fn calibration_seed(master_seed: u64) -> u64 {
    split_seed(master_seed, CALIBRATION_STREAM)
}

// ---------------------------------------------------------------------------
// Table output
// ---------------------------------------------------------------------------

/// One CSV row: an (experiment, test) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment_id: String,
    pub n: usize,
    pub p: usize,
    pub model: String,
    pub rho: Option<f64>,
    pub test_id: String,
    pub reps: usize,
    pub alpha: f64,
    pub reject_rate: Option<f64>,
    pub stat_mean: Option<f64>,
    pub stat_sd: Option<f64>,
    pub seconds: f64,
}

/// Flatten results into CSV rows, one per (experiment, test), in input order.
pub fn to_rows(results: &[ExperimentResult]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for r in results {
        for t in &r.tests {
            rows.push(CsvRow {
                experiment_id: r.config.id.clone(),
                n: r.config.n,
                p: r.config.p,
                model: r.config.model.label(),
                rho: r.config.model.rho(),
                test_id: t.test_id.name().to_string(),
                reps: r.config.reps,
                alpha: r.config.alpha,
                reject_rate: t.reject_rate,
                stat_mean: t.stat_mean,
                stat_sd: t.stat_sd,
                seconds: r.seconds,
            });
        }
    }
    rows
}

fn opt_field(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "-".to_string(),
    }
}

fn parse_opt(s: &str, row: usize, col: usize) -> Result<Option<f64>> {
    if s == "-" {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| Error::Parse { row, col, msg: e.to_string() })
}

/// Write results as CSV (one row per experiment/test pair). Not-applicable
/// cells are written as `-`, mirroring the table convention.
pub fn write_csv<W: Write>(results: &[ExperimentResult], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record([
            "experiment_id",
            "n",
            "p",
            "model",
            "rho",
            "test_id",
            "reps",
            "alpha",
            "reject_rate",
            "stat_mean",
            "stat_sd",
            "seconds",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    for row in to_rows(results) {
        writer
            .write_record([
                row.experiment_id.clone(),
                row.n.to_string(),
                row.p.to_string(),
                row.model.clone(),
                opt_field(row.rho),
                row.test_id.clone(),
                row.reps.to_string(),
                format!("{}", row.alpha),
                opt_field(row.reject_rate),
                opt_field(row.stat_mean),
                opt_field(row.stat_sd),
                format!("{}", row.seconds),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Parse a CSV document produced by [`write_csv`].
pub fn read_csv<R: Read>(r: R) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse { row: i + 1, col: 0, msg: e.to_string() })?;
        let field = |col: usize| -> Result<&str> {
            record.get(col).ok_or(Error::Parse { row: i + 1, col, msg: "missing field".into() })
        };
        let parse_num = |col: usize| -> Result<f64> {
            field(col)?
                .parse::<f64>()
                .map_err(|e| Error::Parse { row: i + 1, col, msg: e.to_string() })
        };
        let parse_usize = |col: usize| -> Result<usize> {
            field(col)?
                .parse::<usize>()
                .map_err(|e| Error::Parse { row: i + 1, col, msg: e.to_string() })
        };
        rows.push(CsvRow {
            experiment_id: field(0)?.to_string(),
            n: parse_usize(1)?,
            p: parse_usize(2)?,
            model: field(3)?.to_string(),
            rho: parse_opt(field(4)?, i + 1, 4)?,
            test_id: field(5)?.to_string(),
            reps: parse_usize(6)?,
            alpha: parse_num(7)?,
            reject_rate: parse_opt(field(8)?, i + 1, 8)?,
            stat_mean: parse_opt(field(9)?, i + 1, 9)?,
            stat_sd: parse_opt(field(10)?, i + 1, 10)?,
            seconds: parse_num(11)?,
        });
    }
    Ok(rows)
}

/// Serialize results as JSON (full config echo included).
pub fn write_json<W: Write>(results: &[ExperimentResult], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, results).map_err(|e| Error::Io(e.to_string()))
}

/// Parse a JSON document produced by [`write_json`].
pub fn read_json<R: Read>(r: R) -> Result<Vec<ExperimentResult>> {
    serde_json::from_reader(r).map_err(|e| Error::Parse { row: 0, col: 0, msg: e.to_string() })
}
