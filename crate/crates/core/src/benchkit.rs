//! Known-axis benchmark pairs, the max-over-training evaluation protocol,
//! generalization gaps and reports.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{diff_configs, group_of_path, load_config, ConfigError, ConfigGroup, EnvConfig, FieldDiff};
use crate::env::{rollout, Env, EnvError, EpisodeSummary, Policy};
use crate::rng::RngKey;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{metric} gap is undefined: training value is zero")]
    DegenerateBaseline { metric: &'static str },
    #[error("{0} must be non-empty")]
    Empty(&'static str),
    #[error("pair {pair} changes {path}, outside its axis")]
    AxisLeak { pair: String, path: String },
    #[error("pair {0} has identical train and eval configs")]
    NoShift(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("unknown pair `{0}`")]
    UnknownPair(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Agent,
    Background,
    Distractors,
    Effects,
    Filters,
    Layout,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Agent, Suite::Background, Suite::Distractors, Suite::Effects, Suite::Filters, Suite::Layout];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Agent => "agent",
            Suite::Background => "background",
            Suite::Distractors => "distractors",
            Suite::Effects => "effects",
            Suite::Filters => "filters",
            Suite::Layout => "layout",
        }
    }

    /// Configuration groups a pair in this suite may change.
    pub fn axis_groups(self) -> &'static [ConfigGroup] {
        match self {
            Suite::Agent => &[ConfigGroup::Character],
            Suite::Background => &[ConfigGroup::Background],
            Suite::Distractors => &[ConfigGroup::Npc, ConfigGroup::Distractors],
            Suite::Effects => &[ConfigGroup::Effects],
            Suite::Filters => &[ConfigGroup::Filters],
            Suite::Layout => &[ConfigGroup::Layout],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s.to_ascii_lowercase())
            .ok_or_else(|| BenchError::UnknownSuite(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkPair {
    pub suite: Suite,
    pub id: u32,
    pub description: String,
    pub train: EnvConfig,
    pub eval: EnvConfig,
}

impl BenchmarkPair {
    /// `suite-id`, e.g. `filters-4`.
    pub fn name(&self) -> String {
        format!("{}-{}", self.suite, self.id)
    }

    /// Train/eval differences; non-empty and confined to the suite's groups.
    pub fn check_isolation(&self) -> Result<Vec<FieldDiff>, BenchError> {
        let diffs = diff_configs(&self.train, &self.eval);
        if diffs.is_empty() {
            return Err(BenchError::NoShift(self.name()));
        }
        let allowed = self.suite.axis_groups();
        if let Some(d) = diffs.iter().find(|d| !allowed.contains(&group_of_path(&d.path))) {
            return Err(BenchError::AxisLeak { pair: self.name(), path: d.path.clone() });
        }
        Ok(diffs)
    }
}

macro_rules! pair_sources {
    ($(($suite:literal, $id:literal)),* $(,)?) => {
        &[$((
            $suite,
            $id,
            include_str!(concat!("../suites/", $suite, "/", $id, "/train.yaml")),
            include_str!(concat!("../suites/", $suite, "/", $id, "/eval.yaml")),
        )),*]
    };
}

const PAIR_SOURCES: &[(&str, u32, &str, &str)] = pair_sources![
    ("agent", 1), ("agent", 2), ("agent", 3), ("agent", 4), ("agent", 5),
    ("background", 1), ("background", 2), ("background", 3), ("background", 4), ("background", 5),
    ("background", 6), ("background", 7), ("background", 8), ("background", 9), ("background", 10),
    ("distractors", 1), ("distractors", 2), ("distractors", 3),
    ("distractors", 4), ("distractors", 5), ("distractors", 6),
    ("effects", 1), ("effects", 2), ("effects", 3),
    ("filters", 1), ("filters", 2), ("filters", 3), ("filters", 4), ("filters", 5),
    ("filters", 6), ("filters", 7), ("filters", 8), ("filters", 9),
    ("layout", 1),
];

const INDEX: &str = include_str!("../suites/index.yaml");

#[derive(Deserialize)]
struct IndexEntry {
    suite: Suite,
    id: u32,
    description: String,
}

#[derive(Deserialize)]
struct Index {
    pairs: Vec<IndexEntry>,
}

/// All 34 pairs in suite order.
pub fn suite_registry() -> Vec<BenchmarkPair> {
    let index: Index = serde_yaml::from_str(INDEX).expect("bundled suite index parses");
    PAIR_SOURCES
        .iter()
        .map(|&(suite, id, train, eval)| {
            let suite: Suite = suite.parse().expect("bundled suite name");
            let description = index
                .pairs
                .iter()
                .find(|e| e.suite == suite && e.id == id)
                .map(|e| e.description.clone())
                .unwrap_or_default();
            BenchmarkPair {
                suite,
                id,
                description,
                train: load_config(train).expect("bundled train config is valid"),
                eval: load_config(eval).expect("bundled eval config is valid"),
            }
        })
        .collect()
}

/// Look up a pair by `suite-id` name.
pub fn find_pair(name: &str) -> Result<BenchmarkPair, BenchError> {
    suite_registry()
        .into_iter()
        .find(|p| p.name() == name.to_ascii_lowercase())
        .ok_or_else(|| BenchError::UnknownPair(name.to_string()))
}

// ---------------------------------------------------------------------------
// Metrics and gaps
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub sem: f64,
}

impl Stat {
    /// Mean and `sd / sqrt(n)` with the `n - 1` estimator; `sem = 0` for `n = 1`.
    pub fn of(xs: &[f64]) -> Stat {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Stat { mean: f64::NAN, sem: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return Stat { mean, sem: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Stat { mean, sem: (var / n).sqrt() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub distance: Stat,
    pub progress: Stat,
    pub success_rate: Stat,
    #[serde(rename = "return")]
    pub ret: Stat,
}

impl MetricRecord {
    /// Record with the given means and zero SEM.
    pub fn from_means(distance: f64, progress: f64, success_rate: f64, ret: f64) -> Self {
        let s = |mean| Stat { mean, sem: 0.0 };
        MetricRecord { distance: s(distance), progress: s(progress), success_rate: s(success_rate), ret: s(ret) }
    }

    /// Means in table order.
    pub fn mean_vector(&self) -> [f64; 4] {
        [self.distance.mean, self.progress.mean, self.success_rate.mean, self.ret.mean]
    }
}

/// Percent gaps are `None` where the training value is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub d_dist_pct: Option<f64>,
    pub d_prog_pct: Option<f64>,
    pub d_sr_pct: Option<f64>,
    pub d_ret_abs: f64,
}

/// `(train - eval) / train * 100`.
pub fn pct_gap(train: f64, eval: f64, metric: &'static str) -> Result<f64, BenchError> {
    if train == 0.0 {
        return Err(BenchError::DegenerateBaseline { metric });
    }
    Ok((train - eval) / train * 100.0)
}

/// Gaps between aggregated means; fails on a zero percent denominator.
pub fn gap(train: &MetricRecord, eval: &MetricRecord) -> Result<GapRecord, BenchError> {
    Ok(GapRecord {
        d_dist_pct: Some(pct_gap(train.distance.mean, eval.distance.mean, "distance")?),
        d_prog_pct: Some(pct_gap(train.progress.mean, eval.progress.mean, "progress")?),
        d_sr_pct: Some(pct_gap(train.success_rate.mean, eval.success_rate.mean, "success_rate")?),
        d_ret_abs: (train.ret.mean - eval.ret.mean).abs(),
    })
}

/// As [`gap`], leaving undefined percent gaps as `None`.
pub fn gap_partial(train: &MetricRecord, eval: &MetricRecord) -> GapRecord {
    GapRecord {
        d_dist_pct: pct_gap(train.distance.mean, eval.distance.mean, "distance").ok(),
        d_prog_pct: pct_gap(train.progress.mean, eval.progress.mean, "progress").ok(),
        d_sr_pct: pct_gap(train.success_rate.mean, eval.success_rate.mean, "success_rate").ok(),
        d_ret_abs: (train.ret.mean - eval.ret.mean).abs(),
    }
}

/// Unweighted mean over configurations; SEM across configurations, or the
/// single record's SEM for a one-config suite.
pub fn expected_performance(records: &[MetricRecord]) -> Result<MetricRecord, BenchError> {
    match records {
        [] => Err(BenchError::Empty("records")),
        [one] => Ok(*one),
        _ => {
            let col = |f: fn(&MetricRecord) -> f64| Stat::of(&records.iter().map(f).collect::<Vec<_>>());
            Ok(MetricRecord {
                distance: col(|r| r.distance.mean),
                progress: col(|r| r.progress.mean),
                success_rate: col(|r| r.success_rate.mean),
                ret: col(|r| r.ret.mean),
            })
        }
    }
}

/// Mean of per-config gaps, skipping undefined entries.
pub fn mean_of_gaps(gaps: &[GapRecord]) -> GapRecord {
    let mean = |f: fn(&GapRecord) -> Option<f64>| {
        let v: Vec<f64> = gaps.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    GapRecord {
        d_dist_pct: mean(|g| g.d_dist_pct),
        d_prog_pct: mean(|g| g.d_prog_pct),
        d_sr_pct: mean(|g| g.d_sr_pct),
        d_ret_abs: if gaps.is_empty() { 0.0 } else { gaps.iter().map(|g| g.d_ret_abs).sum::<f64>() / gaps.len() as f64 },
    }
}

// ---------------------------------------------------------------------------
// Evaluation protocol
// ---------------------------------------------------------------------------

/// Per-run metric means `[distance, progress, success_rate, return]`.
pub type RunMetrics = [f64; 4];

pub fn run_metrics(episodes: &[EpisodeSummary]) -> RunMetrics {
    let n = episodes.len() as f64;
    let mut m = [0.0; 4];
    for e in episodes {
        m[0] += e.distance;
        m[1] += e.progress;
        m[2] += e.success as u8 as f64;
        m[3] += e.episode_return;
    }
    m.map(|v| v / n)
}

/// Elementwise maximum over checkpoints; each metric is maximized
/// independently.
pub fn max_over_checkpoints(runs: &[RunMetrics]) -> Option<RunMetrics> {
    runs.iter().copied().reduce(|a, b| [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2]), a[3].max(b[3])])
}

/// Aggregate per-seed maxima into a record.
pub fn aggregate_seeds(per_seed: &[RunMetrics]) -> MetricRecord {
    let col = |k: usize| Stat::of(&per_seed.iter().map(|m| m[k]).collect::<Vec<_>>());
    MetricRecord { distance: col(0), progress: col(1), success_rate: col(2), ret: col(3) }
}

/// A checkpoint: builds a fresh policy for a rollout key.
pub type Checkpoint<'a> = &'a (dyn Fn(RngKey) -> Box<dyn Policy> + Sync);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub suite: Suite,
    pub id: u32,
    pub description: String,
    pub train: MetricRecord,
    pub eval: MetricRecord,
    pub gaps: GapRecord,
}

/// Max-over-training evaluation of one pair. For seed `k` and checkpoint `c`,
/// both configs use episode keys `seeds[k].child(c)` and the same policy key,
/// so the two sides differ only in rendering.
pub fn evaluate_pair(
    pair: &BenchmarkPair,
    checkpoints: &[Checkpoint<'_>],
    seeds: &[RngKey],
    episodes_per_eval: usize,
) -> Result<PairResult, BenchError> {
    if checkpoints.is_empty() {
        return Err(BenchError::Empty("checkpoints"));
    }
    if seeds.is_empty() {
        return Err(BenchError::Empty("seeds"));
    }
    let train_env = Env::new(&pair.train)?;
    let eval_env = Env::new(&pair.eval)?;
    let side = |env: &Env| -> Result<MetricRecord, BenchError> {
        let per_seed = seeds
            .par_iter()
            .map(|&seed| {
                let runs = checkpoints
                    .iter()
                    .enumerate()
                    .map(|(c, ckpt)| {
                        let key = seed.child(c as u64);
                        let mut policy = ckpt(key.fold_in(1));
                        let eps = rollout(env, policy.as_mut(), key.fold_in(0), episodes_per_eval)?;
                        Ok(run_metrics(&eps))
                    })
                    .collect::<Result<Vec<_>, BenchError>>()?;
                Ok(max_over_checkpoints(&runs).expect("non-empty checkpoints"))
            })
            .collect::<Result<Vec<_>, BenchError>>()?;
        Ok(aggregate_seeds(&per_seed))
    };
    let train = side(&train_env)?;
    let eval = side(&eval_env)?;
    Ok(PairResult {
        suite: pair.suite,
        id: pair.id,
        description: pair.description.clone(),
        gaps: gap_partial(&train, &eval),
        train,
        eval,
    })
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub n_configs: usize,
    pub train: MetricRecord,
    pub eval: MetricRecord,
    /// Gaps between the suite-level means.
    pub gaps: GapRecord,
    /// Mean of the per-config gaps.
    pub mean_config_gaps: GapRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub pairs: Vec<PairResult>,
    pub suites: Vec<SuiteSummary>,
}

pub fn emit_report(results: &[PairResult]) -> Report {
    let suites = Suite::ALL
        .into_iter()
        .filter_map(|suite| {
            let rows: Vec<&PairResult> = results.iter().filter(|r| r.suite == suite).collect();
            if rows.is_empty() {
                return None;
            }
            let train = expected_performance(&rows.iter().map(|r| r.train).collect::<Vec<_>>()).ok()?;
            let eval = expected_performance(&rows.iter().map(|r| r.eval).collect::<Vec<_>>()).ok()?;
            Some(SuiteSummary {
                suite,
                n_configs: rows.len(),
                gaps: gap_partial(&train, &eval),
                mean_config_gaps: mean_of_gaps(&rows.iter().map(|r| r.gaps).collect::<Vec<_>>()),
                train,
                eval,
            })
        })
        .collect();
    Report { schema_version: REPORT_SCHEMA_VERSION, pairs: results.to_vec(), suites }
}

fn fmt_stat(s: Stat, decimals: usize) -> String {
    format!("{:.*}±{:.*}", decimals, s.mean, decimals, s.sem)
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "undef".to_string(), |x| format!("{x:.1}"))
}

fn block(r: &MetricRecord) -> [String; 4] {
    [fmt_stat(r.distance, 1), fmt_stat(r.progress, 2), fmt_stat(r.success_rate, 2), fmt_stat(r.ret, 1)]
}

fn gap_cells(g: &GapRecord) -> [String; 4] {
    [fmt_pct(g.d_dist_pct), fmt_pct(g.d_prog_pct), fmt_pct(g.d_sr_pct), format!("{:.1}", g.d_ret_abs)]
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Plain-text table: train block, eval block, gap block.
    pub fn table(&self) -> String {
        let header = [
            "suite", "id", "train dist", "train prog", "train SR", "train ret", "eval dist", "eval prog", "eval SR",
            "eval ret", "ΔDist %", "ΔProg %", "ΔSR %", "ΔRet",
        ];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        let mut push = |suite: String, id: String, tr: &MetricRecord, ev: &MetricRecord, g: &GapRecord| {
            let mut row = vec![suite, id];
            row.extend(block(tr));
            row.extend(block(ev));
            row.extend(gap_cells(g));
            rows.push(row);
        };
        for p in &self.pairs {
            push(p.suite.to_string(), p.id.to_string(), &p.train, &p.eval, &p.gaps);
        }
        for s in &self.suites {
            push(s.suite.to_string(), "all".into(), &s.train, &s.eval, &s.gaps);
        }
        let widths: Vec<usize> =
            (0..header.len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    /// Write `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), BenchError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| BenchError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json()).map_err(io(&json))?;
        let txt = dir.join("report.txt");
        std::fs::write(&txt, self.table()).map_err(io(&txt))?;
        Ok(())
    }
}
