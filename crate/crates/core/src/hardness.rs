//! Classification hardness: per-sample error of a scorer on a labelled row.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::model::ProbabilisticClassifier;

/// Probabilities are clamped to `[CE_EPS, 1 - CE_EPS]` before taking logs.
pub const CE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardnessFunction {
    /// `|p − y|`
    #[default]
    #[serde(rename = "absolute")]
    AbsoluteError,
    /// `(p − y)²`
    #[serde(rename = "squared")]
    SquaredError,
    /// `−y·ln p − (1 − y)·ln(1 − p)`
    #[serde(rename = "cross-entropy")]
    CrossEntropy,
}

impl HardnessFunction {
    pub const ALL: [HardnessFunction; 3] = [
        HardnessFunction::AbsoluteError,
        HardnessFunction::SquaredError,
        HardnessFunction::CrossEntropy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            HardnessFunction::AbsoluteError => "absolute",
            HardnessFunction::SquaredError => "squared",
            HardnessFunction::CrossEntropy => "cross-entropy",
        }
    }

    /// Hardness of predicting `p` for a row labelled `y`.
    pub fn evaluate(&self, p: f64, y: u8) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SpeError::Range(format!("probability {p} outside [0, 1]")));
        }
        if y > 1 {
            return Err(SpeError::Label(format!("label must be 0 or 1, got {y}")));
        }
        let y = y as f64;
        Ok(match self {
            HardnessFunction::AbsoluteError => (p - y).abs(),
            HardnessFunction::SquaredError => (p - y) * (p - y),
            HardnessFunction::CrossEntropy => {
                let p = p.clamp(CE_EPS, 1.0 - CE_EPS);
                -y * p.ln() - (1.0 - y) * (1.0 - p).ln()
            }
        })
    }
}

impl fmt::Display for HardnessFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HardnessFunction {
    type Err = SpeError;

    fn from_str(s: &str) -> Result<Self> {
        HardnessFunction::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| {
                SpeError::param(
                    "hardness",
                    format!("unknown `{s}`; expected one of absolute, squared, cross-entropy"),
                )
            })
    }
}

/// Hardness of every majority row under `scorer`, in majority-index order.
pub fn hardness_over_majority<C>(
    data: &Dataset,
    scorer: &C,
    function: HardnessFunction,
) -> Result<Vec<(usize, f64)>>
where
    C: ProbabilisticClassifier + ?Sized,
{
    data.majority_indices()
        .par_iter()
        .map(|&i| {
            let p = scorer.predict_proba(data.row(i))?;
            Ok((i, function.evaluate(p, 0)?))
        })
        .collect()
}

/// Same as [`hardness_over_majority`] but from precomputed scores, one per
/// majority row in majority-index order.
pub fn hardness_from_scores(
    majority: &[usize],
    scores: &[f64],
    function: HardnessFunction,
) -> Result<Vec<(usize, f64)>> {
    majority
        .iter()
        .zip(scores)
        .map(|(&i, &p)| Ok((i, function.evaluate(p, 0)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::Constant;
    use proptest::prelude::*;

    use HardnessFunction::*;

    /// Scores a row by looking up its first feature.
    struct FirstFeature;

    impl ProbabilisticClassifier for FirstFeature {
        fn n_features(&self) -> usize {
            1
        }

        fn predict_proba(&self, x: &[f64]) -> Result<f64> {
            Ok(x[0])
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn pointwise_examples() {
        assert!((AbsoluteError.evaluate(0.7, 1).unwrap() - 0.3).abs() < 1e-15);
        assert!((SquaredError.evaluate(0.7, 1).unwrap() - 0.09).abs() < 1e-15);
        let ce = CrossEntropy.evaluate(0.5, 1).unwrap();
        assert!((ce - 2f64.ln()).abs() < 1e-15);
        assert!((ce - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn cross_entropy_is_finite_at_extremes() {
        let worst = CrossEntropy.evaluate(1.0, 0).unwrap();
        assert!(worst.is_finite());
        assert!((worst + CE_EPS.ln()).abs() < 1e-3);
        assert!(CrossEntropy.evaluate(0.0, 0).unwrap() < 1e-11);
    }

    #[test]
    fn out_of_range_probability() {
        assert!(matches!(AbsoluteError.evaluate(1.5, 0), Err(SpeError::Range(_))));
        assert!(matches!(SquaredError.evaluate(-0.1, 1), Err(SpeError::Range(_))));
        assert!(AbsoluteError.evaluate(f64::NAN, 1).is_err());
    }

    #[test]
    fn parses_cli_identifiers() {
        for h in HardnessFunction::ALL {
            assert_eq!(h.as_str().parse::<HardnessFunction>().unwrap(), h);
        }
        assert!("foo".parse::<HardnessFunction>().is_err());
    }

    #[test]
    fn majority_batch() {
        let d = Dataset::new(vec![0.0, 0.0, 0.0], 1, vec![0, 0, 0]).unwrap();
        let zero = Constant { p: 0.0, arity: 1 };
        let one = Constant { p: 1.0, arity: 1 };
        let h = hardness_over_majority(&d, &zero, AbsoluteError).unwrap();
        assert!(h.iter().all(|&(_, v)| v == 0.0));
        let h = hardness_over_majority(&d, &one, AbsoluteError).unwrap();
        assert!(h.iter().all(|&(_, v)| v == 1.0));

        // minority row 1 is skipped
        let d = Dataset::new(vec![0.2, 0.5, 0.9], 1, vec![0, 1, 0]).unwrap();
        let h = hardness_over_majority(&d, &FirstFeature, SquaredError).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!((h[0].0, h[1].0), (0, 2));
        assert!((h[0].1 - 0.04).abs() < 1e-15);
        assert!((h[1].1 - 0.81).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn monotone_in_probability(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for h in HardnessFunction::ALL {
                prop_assert!(h.evaluate(lo, 0).unwrap() < h.evaluate(hi, 0).unwrap());
                prop_assert!(h.evaluate(lo, 1).unwrap() > h.evaluate(hi, 1).unwrap());
            }
        }

        #[test]
        fn absolute_error_label_flip(p in 0.0f64..=1.0, y in 0u8..2) {
            let a = AbsoluteError.evaluate(p, y).unwrap();
            let b = AbsoluteError.evaluate(1.0 - p, 1 - y).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn bounded_errors_stay_in_unit_interval(p in 0.0f64..=1.0, y in 0u8..2) {
            for h in [AbsoluteError, SquaredError] {
                let v = h.evaluate(p, y).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(CrossEntropy.evaluate(p, y).unwrap() >= 0.0);
        }
    }
}
