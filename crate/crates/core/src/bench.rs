//! Benchmark suites on generated checkerboard data.
//!
//! Each repeat `r` draws a training set and an independent test set from
//! seeds derived off the suite seed, and every method in the repeat sees the
//! same data and the same fitting seed. Cells run in parallel; results do not
//! depend on scheduling.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{corrupt_missing, CheckerboardSpec};
use crate::dataset::Dataset;
use crate::ensemble::{fit_method, Method, MethodConfig};
use crate::error::{Result, SpeError};
use crate::learners::{AdaBoostParams, BaseLearner, BaseModel, DecisionTreeParams};
use crate::metrics::{aucprc, evaluate, DEFAULT_THRESHOLD};
use crate::model::{predict_dataset, EnsembleModel};
use crate::rng::RandomSource;

pub const BENCH_HEADER: [&str; 5] = ["method", "learner", "metric", "mean", "std"];
pub const OVERLAP_COVS: [f64; 3] = [0.05, 0.10, 0.15];
pub const MISSING_RATIOS: [f64; 4] = [0.0, 0.25, 0.5, 0.75];
pub const METHODS: [Method; 4] = [Method::RandUnder, Method::Easy, Method::Cascade, Method::Spe];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Checkerboard,
    OverlapSweep,
    MissingSweep,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Checkerboard => "checkerboard",
            Suite::OverlapSweep => "overlap-sweep",
            Suite::MissingSweep => "missing-sweep",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = SpeError;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::Checkerboard, Suite::OverlapSweep, Suite::MissingSweep]
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| {
                SpeError::param(
                    "suite",
                    format!("unknown `{s}`; expected one of checkerboard, overlap-sweep, missing-sweep"),
                )
            })
    }
}

/// The learners a suite runs, as `(name, config)`.
pub fn suite_learners(suite: Suite) -> Vec<(&'static str, BaseLearner)> {
    let tree = ("tree", BaseLearner::Tree(DecisionTreeParams::with_max_depth(10)));
    match suite {
        Suite::Checkerboard => vec![tree, ("adaboost", BaseLearner::AdaBoost(AdaBoostParams::default()))],
        Suite::OverlapSweep | Suite::MissingSweep => vec![tree],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub suite: Suite,
    pub repeats: usize,
    pub seed: u64,
    pub n_estimators: usize,
    pub k_bins: usize,
    pub n_minority: usize,
    pub n_majority: usize,
}

impl BenchOptions {
    pub fn new(suite: Suite) -> Self {
        BenchOptions {
            suite,
            repeats: 10,
            seed: 0,
            n_estimators: match suite {
                Suite::OverlapSweep => 50,
                _ => 10,
            },
            k_bins: 20,
            n_minority: 1000,
            n_majority: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(SpeError::param("repeats", "must be at least 1"));
        }
        if self.n_estimators == 0 {
            return Err(SpeError::param("n_estimators", "must be at least 1"));
        }
        if self.k_bins == 0 {
            return Err(SpeError::param("k_bins", "must be at least 1"));
        }
        Ok(())
    }

    /// Settings of a suite: `(metric suffix, cov, missing ratio)`.
    fn settings(&self) -> Vec<(String, f64, f64)> {
        match self.suite {
            Suite::Checkerboard => vec![(String::new(), 0.1, 0.0)],
            Suite::OverlapSweep => OVERLAP_COVS
                .iter()
                .map(|&c| (format!("@cov={c:.2}"), c, 0.0))
                .collect(),
            Suite::MissingSweep => MISSING_RATIOS
                .iter()
                .map(|&m| (format!("@missing={m:.2}"), 0.1, m))
                .collect(),
        }
    }

    fn metric_names(&self) -> &'static [&'static str] {
        match self.suite {
            Suite::Checkerboard => &["aucprc", "f1", "gmean", "mcc"],
            _ => &["aucprc"],
        }
    }
}

/// Train and test data for one repeat.
#[derive(Debug, Clone)]
pub struct RepeatData {
    pub train: Dataset,
    pub test: Dataset,
    pub fit_seed: u64,
}

/// Generates (and optionally corrupts) the data of repeat `r`.
pub fn repeat_data(
    seed: u64,
    repeat: usize,
    cov_scale: f64,
    missing: f64,
    n_minority: usize,
    n_majority: usize,
) -> Result<RepeatData> {
    let root = RandomSource::new(seed);
    let r = repeat as u64;
    let spec = |label: &str| CheckerboardSpec {
        cov_scale,
        n_minority,
        n_majority,
        seed: root.derive(label, r).seed(),
    };
    let mut train = spec("train").generate()?;
    let mut test = spec("test").generate()?;
    if missing > 0.0 {
        train = corrupt_missing(&train, missing, &mut root.derive("missing-train", r))?;
        test = corrupt_missing(&test, missing, &mut root.derive("missing-test", r))?;
    }
    Ok(RepeatData {
        train,
        test,
        fit_seed: root.derive("fit", r).seed(),
    })
}

/// Test AUCPRC of the mean of the first `j` members, for `j = 1..=len`.
pub fn staged_aucprc(model: &EnsembleModel<BaseModel>, test: &Dataset) -> Result<Vec<f64>> {
    let mut sums = vec![0.0; test.n_rows()];
    let mut curve = Vec::with_capacity(model.len());
    for (j, member) in model.members().iter().enumerate() {
        for (s, p) in sums.iter_mut().zip(predict_dataset(member, test)?) {
            *s += p;
        }
        let scores: Vec<f64> = sums.iter().map(|s| s / (j + 1) as f64).collect();
        curve.push(aucprc(test.labels(), &scores)?);
    }
    Ok(curve)
}

/// Outcome of one (method, learner, setting, repeat) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    /// One value per suite metric, in suite metric order.
    pub values: Vec<f64>,
    /// Staged test AUCPRC (overlap sweep only).
    pub curve: Vec<f64>,
}

/// Trains and scores one cell.
pub fn run_cell(
    data: &RepeatData,
    method: Method,
    learner: &BaseLearner,
    n_estimators: usize,
    k_bins: usize,
    with_curve: bool,
) -> Result<CellResult> {
    let config = MethodConfig {
        method,
        n_estimators,
        k_bins,
        seed: data.fit_seed,
        ..MethodConfig::default()
    };
    let model = fit_method(&data.train, &config, learner)?.model;
    let scores = predict_dataset(&model, &data.test)?;
    let report = evaluate(data.test.labels(), &scores, DEFAULT_THRESHOLD)?;
    let curve = if with_curve {
        staged_aucprc(&model, &data.test)?
    } else {
        Vec::new()
    };
    Ok(CellResult {
        values: vec![report.aucprc, report.f1, report.gmean, report.mcc],
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: String,
    pub learner: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    /// Repeats that produced a value.
    pub runs: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<String>,
}

/// Mean staged AUCPRC across repeats for one (method, learner, setting).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCurve {
    pub method: String,
    pub learner: String,
    pub setting: String,
    pub mean_aucprc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    pub options: BenchOptions,
    pub rows: Vec<BenchRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub curves: Vec<BenchCurve>,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn run_suite(options: &BenchOptions) -> Result<BenchResults> {
    options.validate()?;
    let settings = options.settings();
    let learners = suite_learners(options.suite);
    let with_curve = options.suite == Suite::OverlapSweep;

    let data: Vec<Vec<Result<RepeatData>>> = settings
        .par_iter()
        .map(|(_, cov, missing)| {
            (0..options.repeats)
                .into_par_iter()
                .map(|r| {
                    repeat_data(options.seed, r, *cov, *missing, options.n_minority, options.n_majority)
                })
                .collect()
        })
        .collect();

    // (setting, learner, method, repeat) in row-major order
    let mut cells = Vec::new();
    for s in 0..settings.len() {
        for l in 0..learners.len() {
            for m in 0..METHODS.len() {
                for r in 0..options.repeats {
                    cells.push((s, l, m, r));
                }
            }
        }
    }
    let outcomes: Vec<Result<CellResult>> = cells
        .par_iter()
        .map(|&(s, l, m, r)| {
            let d = data[s][r].as_ref().map_err(|e| SpeError::InvalidInput(e.to_string()))?;
            run_cell(d, METHODS[m], &learners[l].1, options.n_estimators, options.k_bins, with_curve)
        })
        .collect();

    let metrics = options.metric_names();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut chunks = outcomes.chunks(options.repeats);
    for (suffix, _, _) in &settings {
        for (learner_name, _) in &learners {
            for method in METHODS {
                let chunk = chunks.next().expect("one chunk per cell group");
                let errors: Vec<String> = chunk
                    .iter()
                    .enumerate()
                    .filter_map(|(r, c)| c.as_ref().err().map(|e| format!("repeat {r}: {e}")))
                    .collect();
                let ok: Vec<&CellResult> = chunk.iter().filter_map(|c| c.as_ref().ok()).collect();
                for (k, metric) in metrics.iter().enumerate() {
                    let values: Vec<f64> = ok.iter().map(|c| c.values[k]).collect();
                    let (mean, std) = mean_std(&values);
                    rows.push(BenchRow {
                        method: method.to_string(),
                        learner: learner_name.to_string(),
                        metric: format!("{metric}{suffix}"),
                        mean,
                        std,
                        runs: values.len(),
                        errors: errors.clone(),
                    });
                }
                if with_curve && !ok.is_empty() {
                    let len = ok.iter().map(|c| c.curve.len()).min().unwrap_or(0);
                    let mean_aucprc = (0..len)
                        .map(|j| ok.iter().map(|c| c.curve[j]).sum::<f64>() / ok.len() as f64)
                        .collect();
                    curves.push(BenchCurve {
                        method: method.to_string(),
                        learner: learner_name.to_string(),
                        setting: suffix.trim_start_matches('@').to_string(),
                        mean_aucprc,
                    });
                }
            }
        }
    }
    Ok(BenchResults {
        options: options.clone(),
        rows,
        curves,
    })
}

impl BenchResults {
    /// Row lookup by `(method, learner, metric)`.
    pub fn row(&self, method: &str, learner: &str, metric: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.learner == learner && r.metric == metric)
    }

    pub fn curve(&self, method: &str, learner: &str, setting: &str) -> Option<&BenchCurve> {
        self.curves
            .iter()
            .find(|c| c.method == method && c.learner == learner && c.setting == setting)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(BENCH_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.method.clone(),
                r.learner.clone(),
                r.metric.clone(),
                r.mean.to_string(),
                r.std.to_string(),
            ])?;
        }
        w.flush().map_err(|e| SpeError::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite) -> BenchOptions {
        BenchOptions {
            repeats: 2,
            n_estimators: 3,
            n_minority: 40,
            n_majority: 400,
            ..BenchOptions::new(suite)
        }
    }

    #[test]
    fn suite_names() {
        for s in ["checkerboard", "overlap-sweep", "missing-sweep"] {
            assert_eq!(s.parse::<Suite>().unwrap().as_str(), s);
        }
        assert!("fig6".parse::<Suite>().is_err());
    }

    #[test]
    fn mean_std_population() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn checkerboard_rows_in_order() {
        let res = run_suite(&small(Suite::Checkerboard)).unwrap();
        assert_eq!(res.rows.len(), 2 * 4 * 4);
        let first: Vec<&str> = res.rows[..4].iter().map(|r| r.metric.as_str()).collect();
        assert_eq!(first, ["aucprc", "f1", "gmean", "mcc"]);
        assert_eq!((res.rows[0].method.as_str(), res.rows[0].learner.as_str()), ("rand-under", "tree"));
        assert!(res.rows.iter().all(|r| r.runs == 2 && r.errors.is_empty()));
        assert!(res.curves.is_empty());
    }

    #[test]
    fn sweep_row_counts() {
        let res = run_suite(&small(Suite::MissingSweep)).unwrap();
        assert_eq!(res.rows.len(), 4 * METHODS.len());
        assert!(res.row("spe", "tree", "aucprc@missing=0.75").is_some());

        let res = run_suite(&small(Suite::OverlapSweep)).unwrap();
        assert_eq!(res.rows.len(), 3 * METHODS.len());
        let curve = res.curve("spe", "tree", "cov=0.15").unwrap();
        assert_eq!(curve.mean_aucprc.len(), 3);
        let last = res.row("spe", "tree", "aucprc@cov=0.15").unwrap().mean;
        assert!((curve.mean_aucprc[2] - last).abs() < 1e-12);
    }

    #[test]
    fn zero_repeats_rejected() {
        let mut opts = small(Suite::Checkerboard);
        opts.repeats = 0;
        assert!(run_suite(&opts).is_err());
    }

    #[test]
    fn csv_header() {
        let res = run_suite(&small(Suite::MissingSweep)).unwrap();
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,learner,metric,mean,std\n"));
        assert_eq!(text.lines().count(), 1 + res.rows.len());
    }
}
