//! Confusion-matrix statistics, average-precision AUCPRC and stratified splits.
//!
//! Degenerate ratios (0/0) evaluate to 0. G-mean is `√(recall · precision)`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::rng::RandomSource;
use crate::sampling::largest_remainder;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn check_aligned(labels: &[u8], scores: &[f64]) -> Result<()> {
    if labels.len() != scores.len() {
        return Err(SpeError::InvalidInput(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if let Some(y) = labels.iter().find(|&&y| y > 1) {
        return Err(SpeError::Label(format!("labels must be 0 or 1, found {y}")));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(SpeError::InvalidInput(format!("score {s} is not a number")));
    }
    Ok(())
}

/// Counts with the rule `score >= threshold` ⇒ predicted positive.
pub fn confusion(labels: &[u8], scores: &[f64], threshold: f64) -> Result<ConfusionMatrix> {
    check_aligned(labels, scores)?;
    let mut cm = ConfusionMatrix::default();
    for (&y, &s) in labels.iter().zip(scores) {
        match (y == 1, s >= threshold) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gmean: f64,
    pub mcc: f64,
}

impl From<&ConfusionMatrix> for ThresholdMetrics {
    fn from(cm: &ConfusionMatrix) -> Self {
        let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        let f1 = ratio(2.0 * recall * precision, recall + precision);
        let gmean = (recall * precision).sqrt();
        let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        let mcc = ratio(tp * tn - fp * fn_, den);
        ThresholdMetrics {
            precision,
            recall,
            f1,
            gmean,
            mcc,
        }
    }
}

/// Area under the precision-recall curve as step-wise average precision.
///
/// Rows are ranked by descending score. Tied scores form one block that
/// contributes its recall gain at the precision reached at the block's end.
pub fn aucprc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    check_aligned(labels, scores)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(SpeError::InvalidInput(
            "AUCPRC needs at least one positive and one negative label".into(),
        ));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp, mut tp_prev) = (0usize, 0usize, 0usize);
    let mut ap = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        if tp > tp_prev {
            ap += step_area(tp - tp_prev, n_pos, tp, tp + fp);
            tp_prev = tp;
        }
    }
    Ok(ap)
}

/// `ΔRecall × precision` for one step of the curve.
#[inline]
pub(crate) fn step_area(new_tp: usize, n_pos: usize, tp: usize, predicted: usize) -> f64 {
    (new_tp as f64 / n_pos as f64) * (tp as f64 / predicted as f64)
}

/// The full set of evaluation numbers reported by `eval` and `metrics`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub aucprc: f64,
    pub f1: f64,
    pub gmean: f64,
    pub mcc: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

pub fn evaluate(labels: &[u8], scores: &[f64], threshold: f64) -> Result<MetricReport> {
    let m = ThresholdMetrics::from(&confusion(labels, scores, threshold)?);
    Ok(MetricReport {
        aucprc: aucprc(labels, scores)?,
        f1: m.f1,
        gmean: m.gmean,
        mcc: m.mcc,
        precision: m.precision,
        recall: m.recall,
        threshold,
    })
}

/// Disjoint row-index sets, each in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub const DEFAULT_SPLIT: [f64; 3] = [0.6, 0.2, 0.2];

/// Per-class shuffle-and-cut into train / validation / test.
///
/// Each class is apportioned by the largest-remainder rule; a split with a
/// positive fraction that would receive no rows of a class takes one from
/// the largest split instead.
pub fn stratified_split(
    data: &Dataset,
    fractions: [f64; 3],
    rng: &mut RandomSource,
) -> Result<SplitIndices> {
    if fractions.iter().any(|f| !(*f >= 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SpeError::param(
            "split",
            format!("fractions {fractions:?} must be nonnegative and sum to 1"),
        ));
    }
    for (name, n) in [("minority", data.n_minority()), ("majority", data.n_majority())] {
        if n < 3 {
            return Err(SpeError::InvalidInput(format!(
                "{name} class has {n} rows; stratified splitting needs at least 3"
            )));
        }
    }
    let mut out = [Vec::new(), Vec::new(), Vec::new()];
    for class in [data.majority_indices(), data.minority_indices()] {
        let mut shuffled = class.to_vec();
        shuffled.shuffle(rng);
        let mut counts = largest_remainder(&fractions, shuffled.len());
        for s in 0..3 {
            if fractions[s] > 0.0 && counts[s] == 0 {
                let donor = (0..3).max_by_key(|&d| (counts[d], std::cmp::Reverse(d))).unwrap();
                counts[donor] -= 1;
                counts[s] += 1;
            }
        }
        let mut start = 0;
        for s in 0..3 {
            out[s].extend_from_slice(&shuffled[start..start + counts[s]]);
            start += counts[s];
        }
    }
    let [mut train, mut validation, mut test] = out;
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        validation,
        test,
    })
}
