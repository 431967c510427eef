//! Discrete two-class AdaBoost over depth-limited trees.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::learners::tree::{DecisionTree, DecisionTreeParams};
use crate::model::{check_arity, ProbabilisticClassifier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub weak_learner_depth: usize,
    pub learning_rate: f64,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_estimators: 10,
            weak_learner_depth: 1,
            learning_rate: 1.0,
        }
    }
}

impl AdaBoostParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(SpeError::param("n_estimators", "must be at least 1"));
        }
        if self.weak_learner_depth == 0 {
            return Err(SpeError::param("weak_learner_depth", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SpeError::param("learning_rate", "must be a positive number"));
        }
        Ok(())
    }
}

/// Stage weight used for a round with zero weighted error: ½·ln(1e10).
pub fn zero_error_stage_weight() -> f64 {
    0.5 * 1e10f64.ln()
}

/// `learning_rate · ½·ln((1 − err) / err)`, capped for `err = 0`.
pub fn stage_weight(err: f64, learning_rate: f64) -> f64 {
    let raw = if err <= 0.0 {
        zero_error_stage_weight()
    } else {
        (0.5 * ((1.0 - err) / err).ln()).min(zero_error_stage_weight())
    };
    learning_rate * raw
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub weight: f64,
    pub tree: DecisionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    n_features: usize,
    stages: Vec<BoostStage>,
}

/// Per-round diagnostics from [`AdaBoost::fit_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoostRound {
    pub error: f64,
    pub stage_weight: f64,
    /// Sum of the sample weights after renormalization.
    pub weight_sum: f64,
    pub accepted: bool,
}

impl AdaBoost {
    pub fn fit(data: &Dataset, params: &AdaBoostParams) -> Result<AdaBoost> {
        Self::fit_traced(data, params).map(|(m, _)| m)
    }

    pub fn fit_traced(data: &Dataset, params: &AdaBoostParams) -> Result<(AdaBoost, Vec<BoostRound>)> {
        params.validate()?;
        data.require_both_classes()?;
        let m = data.n_rows();
        let tree_params = DecisionTreeParams::with_max_depth(params.weak_learner_depth);
        let mut weights = vec![1.0 / m as f64; m];
        let mut stages = Vec::with_capacity(params.n_estimators);
        let mut trace = Vec::with_capacity(params.n_estimators);
        let mut wrong = vec![false; m];

        for _ in 0..params.n_estimators {
            let tree = DecisionTree::fit(data, Some(&weights), &tree_params)?;
            let mut err = 0.0;
            for (i, row) in data.rows().enumerate() {
                let vote = tree.predict_proba(row)? >= 0.5;
                wrong[i] = vote != (data.label(i) == 1);
                if wrong[i] {
                    err += weights[i];
                }
            }
            if err >= 0.5 {
                // a lone weak learner is still a usable model
                let accepted = stages.is_empty();
                if accepted {
                    stages.push(BoostStage { weight: 1.0, tree });
                }
                trace.push(BoostRound {
                    error: err,
                    stage_weight: if accepted { 1.0 } else { 0.0 },
                    weight_sum: weights.iter().sum(),
                    accepted,
                });
                break;
            }
            let alpha = stage_weight(err, params.learning_rate);
            let (up, down) = (alpha.exp(), (-alpha).exp());
            for (w, &bad) in weights.iter_mut().zip(&wrong) {
                *w *= if bad { up } else { down };
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            trace.push(BoostRound {
                error: err,
                stage_weight: alpha,
                weight_sum: weights.iter().sum(),
                accepted: true,
            });
            stages.push(BoostStage { weight: alpha, tree });
        }
        Ok((
            AdaBoost {
                n_features: data.n_features(),
                stages,
            },
            trace,
        ))
    }

    pub fn from_stages(n_features: usize, stages: Vec<BoostStage>) -> AdaBoost {
        AdaBoost { n_features, stages }
    }

    pub fn stages(&self) -> &[BoostStage] {
        &self.stages
    }

    /// Stage-weight-normalized vote in `[-1, 1]`.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if self.stages.is_empty() {
            return Err(SpeError::InvalidModel("boosted model has no stages".into()));
        }
        check_arity(self.n_features, x)?;
        let (mut vote, mut total) = (0.0, 0.0);
        for s in &self.stages {
            let h = if s.tree.predict_proba(x)? >= 0.5 { 1.0 } else { -1.0 };
            vote += s.weight * h;
            total += s.weight;
        }
        Ok(if total > 0.0 { vote / total } else { 0.0 })
    }
}

/// Logistic map of the normalized margin: `1 / (1 + exp(-2·margin))`.
pub fn margin_to_probability(margin: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * margin).exp())
}

impl ProbabilisticClassifier for AdaBoost {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.margin(x).map(margin_to_probability)
    }
}
