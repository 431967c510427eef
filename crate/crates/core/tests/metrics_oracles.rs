mod common;

use common::{brute_force_ap, direct_metrics, random_instance};
use proptest::prelude::*;
use spe_core::metrics::{aucprc, confusion, evaluate, stratified_split, ConfusionMatrix, ThresholdMetrics};
use spe_core::{Dataset, RandomSource};

#[test]
fn aucprc_equals_brute_force_with_ties() {
    let mut rng = RandomSource::new(99);
    for _ in 0..2000 {
        let (labels, scores) = random_instance(&mut rng, 30);
        assert_eq!(aucprc(&labels, &scores).unwrap(), brute_force_ap(&labels, &scores));
    }
}

#[test]
fn aucprc_known_values() {
    // perfect ranking
    assert_eq!(aucprc(&[1, 1, 0, 0], &[0.9, 0.8, 0.2, 0.1]).unwrap(), 1.0);
    // all tied: precision of the whole set
    assert_eq!(aucprc(&[1, 0, 0, 0], &[0.5; 4]).unwrap(), 0.25);
    // 1/1 at recall 0.5, then 2/3
    let ap = aucprc(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1]).unwrap();
    assert!((ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
}

#[test]
fn worked_confusion_example() {
    let cm = ConfusionMatrix { tp: 50, fp: 10, fn_: 20, tn: 920 };
    let m = ThresholdMetrics::from(&cm);
    assert!((m.mcc - 0.7558).abs() < 1e-4);
    assert!((m.precision - 50.0 / 60.0).abs() < 1e-15);
    assert!((m.recall - 50.0 / 70.0).abs() < 1e-15);
}

#[test]
fn evaluate_schema() {
    let r = evaluate(&[1, 0, 1, 0], &[0.9, 0.4, 0.6, 0.5], 0.5).unwrap();
    let v = serde_json::to_value(r).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["aucprc", "f1", "gmean", "mcc", "precision", "recall", "threshold"]);
    assert_eq!(r.aucprc, 1.0);
}

proptest! {
    #[test]
    fn threshold_metrics_match_direct_formulas(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..5000) {
        let m = ThresholdMetrics::from(&ConfusionMatrix { tp, fp, fn_, tn });
        let d = direct_metrics(tp, fp, fn_, tn);
        for (got, want) in [m.precision, m.recall, m.f1, m.gmean, m.mcc].into_iter().zip(d) {
            prop_assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn confusion_counts_partition_rows(labels in prop::collection::vec(0u8..2, 1..100), t in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let scores: Vec<f64> = labels.iter().map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let cm = confusion(&labels, &scores, t).unwrap();
        prop_assert_eq!(cm.total() as usize, labels.len());
        prop_assert_eq!((cm.tp + cm.fn_) as usize, labels.iter().filter(|&&y| y == 1).count());
    }

    #[test]
    fn aucprc_invariant_under_monotone_transform(seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let (labels, scores) = random_instance(&mut rng, 40);
        let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-3.0 * s).exp())).collect();
        prop_assert_eq!(aucprc(&labels, &scores).unwrap(), aucprc(&labels, &squashed).unwrap());
    }

    #[test]
    fn stratified_split_is_a_partition(n_pos in 3usize..60, n_neg in 3usize..300, seed in any::<u64>()) {
        let labels: Vec<u8> = (0..n_pos + n_neg).map(|i| u8::from(i < n_pos)).collect();
        let features: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
        let d = Dataset::new(features, 1, labels).unwrap();
        let s = stratified_split(&d, [0.6, 0.2, 0.2], &mut RandomSource::new(seed)).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..d.n_rows()).collect::<Vec<_>>());
        for part in [&s.train, &s.validation, &s.test] {
            prop_assert!(part.iter().any(|&i| i < n_pos));
            prop_assert!(part.iter().any(|&i| i >= n_pos));
        }
    }
}
