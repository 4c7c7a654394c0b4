//! Seeded Monte Carlo grid of average manipulation gains.
//!
//! For every `n` (with `m = n`) a fixed batch of uniformly random profiles is
//! drawn; each instance is scored for every `k` with agent 0 holding the
//! dichotomous top-`k` valuation. Instance `i` of size `n` is generated from
//! `seed.derive(n).derive(i)`, so results do not depend on how instances are
//! spread over workers, and cells with the same `n` share their instances.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::{default_epsilon, dichotomous_for, random_profile, GeneratorError, Seed};
use crate::manipulation::{
    best_response, best_response_all_k, IncentiveRatio, ManipulationError, SearchSpace, DEFAULT_FULL_CAP,
};
use crate::model::OrdinalProfile;
use crate::rational::{r, Rational};

/// Significant digits in decimal renderings.
pub const DECIMAL_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("estimated {estimate} engine runs exceeds the budget of {budget}")]
    BudgetExceeded { estimate: u128, budget: u128 },
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Manipulation(#[from] ManipulationError),
    #[error("instance {instance} of n = {n}, k = {k} has ratio {ratio} above 3/2: {profile:?}")]
    BoundViolation { n: usize, k: usize, instance: usize, ratio: IncentiveRatio, profile: OrdinalProfile },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("cannot write results: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("result table is empty")]
    EmptyTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    InterestedFirst,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub instances_per_cell: usize,
    pub seed: Seed,
    pub space: SpaceKind,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Refuse to start when the estimated number of engine runs exceeds this.
    pub budget: u128,
    pub full_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_values: vec![8, 10, 12],
            k_values: (2..=6).collect(),
            instances_per_cell: 1000,
            seed: Seed(0),
            space: SpaceKind::InterestedFirst,
            workers: 0,
            budget: 50_000_000,
            full_cap: DEFAULT_FULL_CAP,
        }
    }
}

impl ExperimentConfig {
    /// Sizes 8 through 20 with 10000 instances per cell.
    pub fn paper_scale() -> Self {
        ExperimentConfig {
            n_values: (8..=20).collect(),
            instances_per_cell: 10_000,
            budget: u128::MAX,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |s: &str| Err(ExperimentError::Config(s.to_string()));
        if self.n_values.is_empty() || self.k_values.is_empty() {
            return bad("n and k ranges must be non-empty");
        }
        if self.instances_per_cell == 0 {
            return bad("at least one instance per cell is required");
        }
        let min_n = *self.n_values.iter().min().expect("non-empty");
        if min_n == 0 {
            return bad("n must be at least 1");
        }
        if self.k_values.iter().any(|&k| k == 0 || k > min_n) {
            return Err(ExperimentError::Config(format!("every k must lie in 1..={min_n}")));
        }
        if self.space == SpaceKind::Full {
            if let Some(&n) = self.n_values.iter().find(|&&n| n > self.full_cap) {
                return Err(ExperimentError::Config(format!(
                    "full search over n = {n} exceeds the cap of {}",
                    self.full_cap
                )));
            }
        }
        Ok(())
    }

    /// Engine runs needed, counting one truthful run per evaluation.
    pub fn estimated_runs(&self) -> u128 {
        let fact = |x: usize| (1..=x as u128).product::<u128>();
        let per = self.instances_per_cell as u128;
        self.n_values
            .iter()
            .map(|&n| match self.space {
                SpaceKind::Full => per * (fact(n) + 1),
                SpaceKind::InterestedFirst => self.k_values.iter().map(|&k| per * (fact(k) + 1)).sum(),
            })
            .sum()
    }
}

/// Aggregated exact ratios for one `(n, k)` cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellStats {
    pub n: usize,
    pub k: usize,
    pub count: usize,
    pub mean_ratio: Rational,
    /// Population variance.
    pub variance: Rational,
    pub max_ratio: Rational,
    pub manipulable: usize,
}

impl CellStats {
    fn from_ratios(n: usize, k: usize, ratios: &[Rational]) -> Self {
        let count = ratios.len();
        let c = Rational::from(count);
        let mean = ratios.iter().sum::<Rational>() / &c;
        let mean_sq = ratios.iter().map(|x| x * x).sum::<Rational>() / &c;
        let variance = mean_sq - &mean * &mean;
        let max_ratio = ratios.iter().cloned().fold(Rational::zero(), Rational::max);
        let manipulable = ratios.iter().filter(|x| **x > Rational::one()).count();
        CellStats { n, k, count, mean_ratio: mean, variance, max_ratio, manipulable }
    }

    pub fn fraction_manipulable(&self) -> Rational {
        Rational::from(self.manipulable) / Rational::from(self.count)
    }

    pub fn mean_decimal(&self) -> String {
        self.mean_ratio.to_decimal(DECIMAL_DIGITS)
    }

    pub fn std_decimal(&self) -> String {
        let std = self.variance.to_f64().max(0.0).sqrt();
        Rational::from_f64(std).unwrap_or_default().to_decimal(DECIMAL_DIGITS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridResults {
    pub seed: Seed,
    pub cells: Vec<CellStats>,
}

/// Profile for instance `index` of size `n`.
pub fn grid_instance(seed: Seed, n: usize, index: usize) -> Result<OrdinalProfile, GeneratorError> {
    random_profile(n, n, seed.derive(n as u64).derive(index as u64))
}

fn score_instance(cfg: &ExperimentConfig, n: usize, index: usize) -> Result<Vec<Rational>, ExperimentError> {
    let profile = grid_instance(cfg.seed, n, index)?;
    let ratios: Vec<IncentiveRatio> = match cfg.space {
        SpaceKind::Full => {
            let all = best_response_all_k(&profile, 0, cfg.full_cap)?;
            cfg.k_values.iter().map(|&k| all[k - 1].ratio.clone()).collect()
        }
        SpaceKind::InterestedFirst => cfg
            .k_values
            .iter()
            .map(|&k| {
                let v = dichotomous_for(&profile, 0, k, default_epsilon())?;
                let space = SearchSpace::interested_first(v.interested().to_vec());
                Ok(best_response(&profile, 0, &v.into(), &space)?.ratio)
            })
            .collect::<Result<_, ExperimentError>>()?,
    };
    let bound = r(3, 2);
    ratios
        .into_iter()
        .zip(&cfg.k_values)
        .map(|(ratio, &k)| match ratio.finite() {
            Some(x) if *x <= bound => Ok(x.clone()),
            _ => Err(ExperimentError::BoundViolation { n, k, instance: index, ratio, profile: profile.clone() }),
        })
        .collect()
}

/// Runs every cell of the grid. Output is identical for any worker count.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridResults, ExperimentError> {
    cfg.validate()?;
    let estimate = cfg.estimated_runs();
    if estimate > cfg.budget {
        return Err(ExperimentError::BudgetExceeded { estimate, budget: cfg.budget });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let mut cells = Vec::new();
    for &n in &cfg.n_values {
        let per_instance: Vec<Vec<Rational>> = pool.install(|| {
            (0..cfg.instances_per_cell).into_par_iter().map(|i| score_instance(cfg, n, i)).collect::<Result<_, _>>()
        })?;
        for (col, &k) in cfg.k_values.iter().enumerate() {
            let ratios: Vec<Rational> = per_instance.iter().map(|row| row[col].clone()).collect();
            cells.push(CellStats::from_ratios(n, k, &ratios));
        }
    }
    Ok(GridResults { seed: cfg.seed, cells })
}

/// An adjacent pair of cells breaking an expected trend by more than the slack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrendWarning {
    /// `"k"` when the mean rose with k at fixed n, `"n"` when it fell with n
    /// at fixed k.
    pub along: &'static str,
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub change: Rational,
}

/// Expected: non-increasing in `k` for fixed `n`, non-decreasing in `n` for
/// fixed `k`.
pub fn trend_warnings(results: &GridResults, slack: &Rational) -> Vec<TrendWarning> {
    let mut out = Vec::new();
    let cell = |n: usize, k: usize| results.cells.iter().find(|c| c.n == n && c.k == k);
    let mut ns: Vec<usize> = results.cells.iter().map(|c| c.n).collect();
    let mut ks: Vec<usize> = results.cells.iter().map(|c| c.k).collect();
    ns.sort_unstable();
    ns.dedup();
    ks.sort_unstable();
    ks.dedup();
    for &n in &ns {
        for w in ks.windows(2) {
            if let (Some(a), Some(b)) = (cell(n, w[0]), cell(n, w[1])) {
                let change = &b.mean_ratio - &a.mean_ratio;
                if change > *slack {
                    out.push(TrendWarning { along: "k", from: (n, w[0]), to: (n, w[1]), change });
                }
            }
        }
    }
    for &k in &ks {
        for w in ns.windows(2) {
            if let (Some(a), Some(b)) = (cell(w[0], k), cell(w[1], k)) {
                let change = &b.mean_ratio - &a.mean_ratio;
                if change < -slack {
                    out.push(TrendWarning { along: "n", from: (w[0], k), to: (w[1], k), change });
                }
            }
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct CsvRow {
    n: usize,
    k: usize,
    count: usize,
    mean_ratio: String,
    std_ratio: String,
    max_ratio: String,
    fraction_manipulable: String,
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JsonCell {
    n: usize,
    k: usize,
    count: usize,
    mean_ratio: String,
    std_ratio: String,
    max_ratio: Rational,
    fraction_manipulable: Rational,
    manipulable: usize,
    mean_ratio_exact: Rational,
    variance_exact: Rational,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonTable {
    seed: Seed,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
    cells: Vec<JsonCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Whitespace-separated blocks, one per `k`, for line plots.
    Gnuplot,
}

/// Columns `n,k,count,mean_ratio,std_ratio,max_ratio,fraction_manipulable,seed`.
pub fn to_csv(results: &GridResults) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &results.cells {
        w.serialize(CsvRow {
            n: c.n,
            k: c.k,
            count: c.count,
            mean_ratio: c.mean_decimal(),
            std_ratio: c.std_decimal(),
            max_ratio: c.max_ratio.to_decimal(DECIMAL_DIGITS),
            fraction_manipulable: c.fraction_manipulable().to_decimal(DECIMAL_DIGITS),
            seed: results.seed.0,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Pretty JSON with exact rationals; `meta` is embedded verbatim.
pub fn to_json(results: &GridResults, meta: Option<serde_json::Value>) -> Result<String, ExperimentError> {
    let cells = results
        .cells
        .iter()
        .map(|c| JsonCell {
            n: c.n,
            k: c.k,
            count: c.count,
            mean_ratio: c.mean_decimal(),
            std_ratio: c.std_decimal(),
            max_ratio: c.max_ratio.clone(),
            fraction_manipulable: c.fraction_manipulable(),
            manipulable: c.manipulable,
            mean_ratio_exact: c.mean_ratio.clone(),
            variance_exact: c.variance.clone(),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&JsonTable { seed: results.seed, meta, cells })?)
}

pub fn from_json(text: &str) -> Result<GridResults, ExperimentError> {
    let t: JsonTable = serde_json::from_str(text)?;
    let cells = t
        .cells
        .into_iter()
        .map(|c| CellStats {
            n: c.n,
            k: c.k,
            count: c.count,
            mean_ratio: c.mean_ratio_exact,
            variance: c.variance_exact,
            max_ratio: c.max_ratio,
            manipulable: c.manipulable,
        })
        .collect();
    Ok(GridResults { seed: t.seed, cells })
}

/// Long format: `n mean std` rows grouped into one block per `k`, blocks
/// separated by two blank lines (addressable as `index`).
pub fn to_long_format(results: &GridResults) -> String {
    let mut ks: Vec<usize> = results.cells.iter().map(|c| c.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut out = String::new();
    for (b, &k) in ks.iter().enumerate() {
        if b > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# k = {k}");
        let _ = writeln!(out, "# n mean_ratio std_ratio max_ratio");
        let mut cells: Vec<&CellStats> = results.cells.iter().filter(|c| c.k == k).collect();
        cells.sort_by_key(|c| c.n);
        for c in cells {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                c.n,
                c.mean_decimal(),
                c.std_decimal(),
                c.max_ratio.to_decimal(DECIMAL_DIGITS)
            );
        }
    }
    out
}

/// Renders `results` and writes them to `path`, prefixed by `header` comment
/// lines for the text formats.
pub fn emit_results(
    results: &GridResults,
    format: Format,
    path: &Path,
    header: &[String],
    meta: Option<serde_json::Value>,
) -> Result<(), ExperimentError> {
    if results.cells.is_empty() {
        return Err(ExperimentError::EmptyTable);
    }
    std::fs::write(path, render(results, format, header, meta)?)?;
    Ok(())
}

pub fn render(
    results: &GridResults,
    format: Format,
    header: &[String],
    meta: Option<serde_json::Value>,
) -> Result<String, ExperimentError> {
    let comments: String = header.iter().map(|h| format!("# {h}\n")).collect();
    Ok(match format {
        Format::Csv => comments + &to_csv(results)?,
        Format::Gnuplot => comments + &to_long_format(results),
        Format::Json => to_json(results, meta)? + "\n",
    })
}
