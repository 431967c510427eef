//! Ensemble training loops: self-paced ensemble, balanced bagging
//! (EasyEnsemble style) and BalanceCascade, plus the single-model baselines
//! (random under-sampling, random over-sampling, no resampling).
//!
//! Every training subset of the under-sampling methods is the full minority
//! set plus `|P|` majority rows. Random streams are derived per purpose and
//! iteration from the configured seed:
//!
//! | stream            | use                                         |
//! |-------------------|---------------------------------------------|
//! | `undersample`, i  | majority draw of iteration / bag `i`        |
//! | `oversample`, 1   | minority repeats for random over-sampling   |
//! | `learner`, i      | handed to the base learner for member `i`   |
//!
//! Index 0 is the self-paced bootstrap model; members are numbered from 1.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::hardness::{hardness_from_scores, HardnessFunction};
use crate::model::{EnsembleModel, Learner, ProbabilisticClassifier};
use crate::rng::RandomSource;
use crate::sampling::{
    bin_sampling_weights, partition_bins, random_oversample, self_paced_undersample,
    undersample_pool, SelfPacedSchedule, DEFAULT_ALPHA_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spe,
    Easy,
    Cascade,
    RandUnder,
    RandOver,
    None,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Spe,
        Method::Easy,
        Method::Cascade,
        Method::RandUnder,
        Method::RandOver,
        Method::None,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Spe => "spe",
            Method::Easy => "easy",
            Method::Cascade => "cascade",
            Method::RandUnder => "rand-under",
            Method::RandOver => "rand-over",
            Method::None => "none",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SpeError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            SpeError::param(
                "method",
                format!("unknown `{s}`; expected one of spe, easy, cascade, rand-under, rand-over, none"),
            )
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeConfig {
    pub n_estimators: usize,
    pub k_bins: usize,
    pub hardness: HardnessFunction,
    pub alpha_cap: f64,
    pub seed: u64,
}

impl Default for SpeConfig {
    fn default() -> Self {
        SpeConfig {
            n_estimators: 10,
            k_bins: 20,
            hardness: HardnessFunction::AbsoluteError,
            alpha_cap: DEFAULT_ALPHA_CAP,
            seed: 0,
        }
    }
}

impl SpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(SpeError::param("n_estimators", "must be at least 1"));
        }
        if self.k_bins == 0 {
            return Err(SpeError::param("k_bins", "must be at least 1"));
        }
        if !(self.alpha_cap > 0.0) {
            return Err(SpeError::param("alpha_cap", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EasyConfig {
    pub n_estimators: usize,
    pub seed: u64,
}

impl Default for EasyConfig {
    fn default() -> Self {
        EasyConfig {
            n_estimators: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub n_estimators: usize,
    /// Fraction of the pool kept after each iteration; `None` picks
    /// `(|P| / |N|)^(1 / (n − 1))` so the pool shrinks to about `|P|`.
    pub keep_fp_rate: Option<f64>,
    pub seed: u64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            n_estimators: 10,
            keep_fp_rate: None,
            seed: 0,
        }
    }
}

impl CascadeConfig {
    pub fn resolved_keep_rate(&self, n_minority: usize, n_majority: usize) -> Result<f64> {
        let rate = match self.keep_fp_rate {
            Some(r) => r,
            None if self.n_estimators < 2 => 1.0,
            None => (n_minority as f64 / n_majority as f64)
                .powf(1.0 / (self.n_estimators - 1) as f64)
                .min(1.0),
        };
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(SpeError::param("keep_fp_rate", format!("{rate} not in (0, 1]")));
        }
        Ok(rate)
    }
}

/// Diagnostics for one trained member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// 0 for the self-paced bootstrap model, else the member number.
    pub iteration: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bin_sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bin_mean_hardness: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bin_quotas: Vec<usize>,
    /// Majority pool the draw came from (cascade only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    pub subset_minority: usize,
    pub subset_majority: usize,
    pub with_replacement: bool,
}

impl IterationReport {
    fn plain(iteration: usize, subset: &Dataset, with_replacement: bool) -> Self {
        IterationReport {
            iteration,
            alpha: None,
            bin_sizes: Vec::new(),
            bin_mean_hardness: Vec::new(),
            bin_quotas: Vec::new(),
            pool_size: None,
            subset_minority: subset.n_minority(),
            subset_majority: subset.n_majority(),
            with_replacement,
        }
    }
}

/// A trained ensemble together with its per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: EnsembleModel<M>,
    pub iterations: Vec<IterationReport>,
}

fn balanced_subset(data: &Dataset, majority: &[usize]) -> Dataset {
    let mut rows = data.minority_indices().to_vec();
    rows.extend_from_slice(majority);
    data.subset(&rows)
}

fn fit_member<L: Learner>(
    learner: &L,
    subset: &Dataset,
    root: &RandomSource,
    iteration: usize,
) -> Result<L::Model> {
    learner
        .fit(subset, &mut root.derive("learner", iteration as u64))
        .map_err(|e| e.at_iteration(iteration))
}

/// Adds `model`'s score on each of `rows` into `sums`.
fn accumulate<M: ProbabilisticClassifier>(
    model: &M,
    data: &Dataset,
    rows: &[usize],
    sums: &mut [f64],
) -> Result<()> {
    let scores: Vec<f64> = rows
        .par_iter()
        .map(|&i| model.predict_proba(data.row(i)))
        .collect::<Result<_>>()?;
    for (s, p) in sums.iter_mut().zip(scores) {
        *s += p;
    }
    Ok(())
}

fn config_echo<L: Learner, C: Serialize>(config: &C, learner: &L) -> serde_json::Value {
    serde_json::json!({
        "params": config,
        "learner": learner.describe(),
    })
}

pub fn spe_fit<L: Learner>(data: &Dataset, config: &SpeConfig, learner: &L) -> Result<EnsembleModel<L::Model>> {
    spe_fit_with_report(data, config, learner).map(|t| t.model)
}

/// Self-paced ensemble.
///
/// A bootstrap model `f_0` is trained on a random balanced subset. Iteration
/// `i` scores the majority rows with the mean of `f_0 … f_{i−1}`, bins their
/// hardness, weights bins by `1 / (h + α_i)` and draws `|P|` majority rows to
/// train `f_i`. The returned ensemble holds `f_1 … f_n`.
pub fn spe_fit_with_report<L: Learner>(
    data: &Dataset,
    config: &SpeConfig,
    learner: &L,
) -> Result<Trained<L::Model>> {
    config.validate()?;
    data.require_both_classes()?;
    let root = RandomSource::new(config.seed);
    let target = data.n_minority();
    let majority = data.majority_indices();
    let schedule = SelfPacedSchedule {
        n: config.n_estimators,
        alpha_cap: config.alpha_cap,
    };

    let mut reports = Vec::with_capacity(config.n_estimators + 1);
    let draw = undersample_pool(majority, target, &mut root.derive("undersample", 0));
    let subset = balanced_subset(data, &draw.indices);
    let bootstrap = fit_member(learner, &subset, &root, 0)?;
    reports.push(IterationReport::plain(0, &subset, draw.with_replacement));

    // running sum of member scores over the majority rows, f_0 included
    let mut sums = vec![0.0; majority.len()];
    accumulate(&bootstrap, data, majority, &mut sums).map_err(|e| e.at_iteration(0))?;
    let mut members: Vec<L::Model> = Vec::with_capacity(config.n_estimators);

    for i in 1..=config.n_estimators {
        let scores: Vec<f64> = sums.iter().map(|s| s / i as f64).collect();
        let hardness = hardness_from_scores(majority, &scores, config.hardness)
            .map_err(|e| e.at_iteration(i))?;
        let partition = partition_bins(&hardness, config.k_bins)?;
        let alpha = schedule.alpha(i)?;
        let weights = bin_sampling_weights(&partition, alpha)?;
        let draw = self_paced_undersample(
            &partition,
            &weights,
            target,
            &mut root.derive("undersample", i as u64),
        )?;
        let subset = balanced_subset(data, &draw.indices);
        let member = fit_member(learner, &subset, &root, i)?;
        if i < config.n_estimators {
            accumulate(&member, data, majority, &mut sums).map_err(|e| e.at_iteration(i))?;
        }
        reports.push(IterationReport {
            iteration: i,
            alpha: Some(alpha),
            bin_sizes: partition.sizes(),
            bin_mean_hardness: partition.mean_hardness().to_vec(),
            bin_quotas: draw.quotas,
            pool_size: None,
            subset_minority: subset.n_minority(),
            subset_majority: subset.n_majority(),
            with_replacement: draw.with_replacement,
        });
        members.push(member);
    }
    Ok(Trained {
        model: EnsembleModel::new("spe", config_echo(config, learner), config.seed, members),
        iterations: reports,
    })
}

pub fn easy_fit<L: Learner>(data: &Dataset, config: &EasyConfig, learner: &L) -> Result<EnsembleModel<L::Model>> {
    easy_fit_with_report(data, config, learner).map(|t| t.model)
}

/// Independent random balanced bags, one member each, trained in parallel.
pub fn easy_fit_with_report<L: Learner>(
    data: &Dataset,
    config: &EasyConfig,
    learner: &L,
) -> Result<Trained<L::Model>>
where
    L::Model: Send,
{
    if config.n_estimators == 0 {
        return Err(SpeError::param("n_estimators", "must be at least 1"));
    }
    data.require_both_classes()?;
    let root = RandomSource::new(config.seed);
    let bags: Vec<(L::Model, IterationReport)> = (1..=config.n_estimators)
        .into_par_iter()
        .map(|i| {
            let draw = undersample_pool(
                data.majority_indices(),
                data.n_minority(),
                &mut root.derive("undersample", i as u64),
            );
            let subset = balanced_subset(data, &draw.indices);
            let member = fit_member(learner, &subset, &root, i)?;
            Ok((member, IterationReport::plain(i, &subset, draw.with_replacement)))
        })
        .collect::<Result<_>>()?;
    let (members, iterations) = bags.into_iter().unzip();
    Ok(Trained {
        model: EnsembleModel::new("easy", config_echo(config, learner), config.seed, members),
        iterations,
    })
}

pub fn cascade_fit<L: Learner>(
    data: &Dataset,
    config: &CascadeConfig,
    learner: &L,
) -> Result<EnsembleModel<L::Model>> {
    cascade_fit_with_report(data, config, learner).map(|t| t.model)
}

/// BalanceCascade: after each member, only the top `⌈keep · |pool|⌉` pool
/// rows by current ensemble score stay in the majority pool; the most
/// confidently rejected rows are dropped. Stops early once the pool is
/// smaller than `|P|`.
pub fn cascade_fit_with_report<L: Learner>(
    data: &Dataset,
    config: &CascadeConfig,
    learner: &L,
) -> Result<Trained<L::Model>> {
    if config.n_estimators == 0 {
        return Err(SpeError::param("n_estimators", "must be at least 1"));
    }
    data.require_both_classes()?;
    let keep = config.resolved_keep_rate(data.n_minority(), data.n_majority())?;
    let root = RandomSource::new(config.seed);
    let target = data.n_minority();

    let mut pool: Vec<usize> = data.majority_indices().to_vec();
    // running score sums indexed by row
    let mut sums = vec![0.0; data.n_rows()];
    let mut members = Vec::with_capacity(config.n_estimators);
    let mut reports = Vec::with_capacity(config.n_estimators);

    for i in 1..=config.n_estimators {
        if i > 1 && pool.len() < target {
            break;
        }
        let draw = undersample_pool(&pool, target, &mut root.derive("undersample", i as u64));
        let subset = balanced_subset(data, &draw.indices);
        let member = fit_member(learner, &subset, &root, i)?;
        let mut report = IterationReport::plain(i, &subset, draw.with_replacement);
        report.pool_size = Some(pool.len());
        reports.push(report);

        if i < config.n_estimators {
            let mut pool_sums: Vec<f64> = pool.iter().map(|&r| sums[r]).collect();
            accumulate(&member, data, &pool, &mut pool_sums).map_err(|e| e.at_iteration(i))?;
            for (&r, s) in pool.iter().zip(&pool_sums) {
                sums[r] = *s;
            }
            let kept = (keep * pool.len() as f64).ceil() as usize;
            if kept < pool.len() {
                let mut ranked = pool.clone();
                ranked.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
                ranked.truncate(kept);
                ranked.sort_unstable();
                pool = ranked;
            }
        }
        members.push(member);
    }
    let echo = serde_json::json!({
        "params": config,
        "keep_fp_rate_resolved": keep,
        "learner": learner.describe(),
    });
    Ok(Trained {
        model: EnsembleModel::new("cascade", echo, config.seed, members),
        iterations: reports,
    })
}

/// One learner on `|P|` uniformly drawn majority rows plus all minority rows.
pub fn rand_under_fit<L: Learner>(data: &Dataset, seed: u64, learner: &L) -> Result<Trained<L::Model>> {
    data.require_both_classes()?;
    let root = RandomSource::new(seed);
    let draw = undersample_pool(
        data.majority_indices(),
        data.n_minority(),
        &mut root.derive("undersample", 1),
    );
    let subset = balanced_subset(data, &draw.indices);
    let member = fit_member(learner, &subset, &root, 1)?;
    Ok(Trained {
        model: EnsembleModel::new(
            "rand-under",
            config_echo(&serde_json::json!({ "seed": seed }), learner),
            seed,
            vec![member],
        ),
        iterations: vec![IterationReport::plain(1, &subset, draw.with_replacement)],
    })
}

/// One learner on all majority rows plus minority rows repeated up to `|N|`.
pub fn rand_over_fit<L: Learner>(data: &Dataset, seed: u64, learner: &L) -> Result<Trained<L::Model>> {
    data.require_both_classes()?;
    let root = RandomSource::new(seed);
    let draw = random_oversample(data, &mut root.derive("oversample", 1))?;
    let mut rows = data.majority_indices().to_vec();
    rows.extend_from_slice(&draw.indices);
    let subset = data.subset(&rows);
    let member = fit_member(learner, &subset, &root, 1)?;
    Ok(Trained {
        model: EnsembleModel::new(
            "rand-over",
            config_echo(&serde_json::json!({ "seed": seed }), learner),
            seed,
            vec![member],
        ),
        iterations: vec![IterationReport::plain(1, &subset, draw.with_replacement)],
    })
}

/// One learner on the data as given.
pub fn plain_fit<L: Learner>(data: &Dataset, seed: u64, learner: &L) -> Result<Trained<L::Model>> {
    if data.is_empty() {
        return Err(SpeError::InvalidInput("no training rows".into()));
    }
    let root = RandomSource::new(seed);
    let member = fit_member(learner, data, &root, 1)?;
    Ok(Trained {
        model: EnsembleModel::new(
            "none",
            config_echo(&serde_json::json!({ "seed": seed }), learner),
            seed,
            vec![member],
        ),
        iterations: vec![IterationReport::plain(1, data, false)],
    })
}

/// Settings shared by every method; fields a method does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub n_estimators: usize,
    pub k_bins: usize,
    pub hardness: HardnessFunction,
    pub alpha_cap: f64,
    pub keep_fp_rate: Option<f64>,
    pub seed: u64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        let spe = SpeConfig::default();
        MethodConfig {
            method: Method::Spe,
            n_estimators: spe.n_estimators,
            k_bins: spe.k_bins,
            hardness: spe.hardness,
            alpha_cap: spe.alpha_cap,
            keep_fp_rate: None,
            seed: 0,
        }
    }
}

impl MethodConfig {
    pub fn spe(&self) -> SpeConfig {
        SpeConfig {
            n_estimators: self.n_estimators,
            k_bins: self.k_bins,
            hardness: self.hardness,
            alpha_cap: self.alpha_cap,
            seed: self.seed,
        }
    }

    pub fn easy(&self) -> EasyConfig {
        EasyConfig {
            n_estimators: self.n_estimators,
            seed: self.seed,
        }
    }

    pub fn cascade(&self) -> CascadeConfig {
        CascadeConfig {
            n_estimators: self.n_estimators,
            keep_fp_rate: self.keep_fp_rate,
            seed: self.seed,
        }
    }
}

/// Dispatches to the training loop named by `config.method`.
pub fn fit_method<L: Learner>(data: &Dataset, config: &MethodConfig, learner: &L) -> Result<Trained<L::Model>>
where
    L::Model: Send,
{
    match config.method {
        Method::Spe => spe_fit_with_report(data, &config.spe(), learner),
        Method::Easy => easy_fit_with_report(data, &config.easy(), learner),
        Method::Cascade => cascade_fit_with_report(data, &config.cascade(), learner),
        Method::RandUnder => rand_under_fit(data, config.seed, learner),
        Method::RandOver => rand_over_fit(data, config.seed, learner),
        Method::None => plain_fit(data, config.seed, learner),
    }
}
