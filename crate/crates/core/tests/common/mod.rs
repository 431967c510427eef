#![allow(dead_code)]

use rand::{Rng, RngCore};

/// Average precision by scanning every distinct score as a threshold and
/// recounting from scratch.
pub fn brute_force_ap(labels: &[u8], scores: &[f64]) -> f64 {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_tp = 0usize;
    for t in thresholds {
        let predicted = scores.iter().filter(|&&s| s >= t).count();
        let tp = labels.iter().zip(scores).filter(|&(&y, &s)| y == 1 && s >= t).count();
        if tp > prev_tp {
            ap += ((tp - prev_tp) as f64 / n_pos as f64) * (tp as f64 / predicted as f64);
            prev_tp = tp;
        }
    }
    ap
}

/// precision, recall, F1, G-mean, MCC straight from the counts.
pub fn direct_metrics(tp: u64, fp: u64, fn_: u64, tn: u64) -> [f64; 5] {
    let (tp, fp, fn_, tn) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
    let div = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);
    let f1 = div(2.0 * tp, 2.0 * tp + fp + fn_);
    let gmean = (precision * recall).sqrt();
    let mcc = div(
        tp * tn - fp * fn_,
        (tp + fp).sqrt() * (tp + fn_).sqrt() * (tn + fp).sqrt() * (tn + fn_).sqrt(),
    );
    [precision, recall, f1, gmean, mcc]
}

/// Random labels with both classes and scores with frequent ties.
pub fn random_instance(rng: &mut impl RngCore, max_len: usize) -> (Vec<u8>, Vec<f64>) {
    loop {
        let n = rng.random_range(2..=max_len);
        let levels = rng.random_range(1..=n);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let pos = labels.iter().filter(|&&y| y == 1).count();
        if pos > 0 && pos < n {
            return (labels, scores);
        }
    }
}
