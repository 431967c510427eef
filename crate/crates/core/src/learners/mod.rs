//! Built-in base learners.

pub mod adaboost;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use adaboost::{AdaBoost, AdaBoostParams};
pub use tree::{DecisionTree, DecisionTreeParams, TreeNode};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::model::{Learner, ProbabilisticClassifier};
use crate::rng::RandomSource;

/// Configuration for one of the built-in learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLearner {
    Tree(DecisionTreeParams),
    #[serde(rename = "adaboost")]
    AdaBoost(AdaBoostParams),
}

impl BaseLearner {
    pub fn name(&self) -> &'static str {
        match self {
            BaseLearner::Tree(_) => "tree",
            BaseLearner::AdaBoost(_) => "adaboost",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseLearner::Tree(p) => p.validate(),
            BaseLearner::AdaBoost(p) => p.validate(),
        }
    }
}

/// A trained built-in learner; this is the member type of serialized ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseModel {
    Tree(DecisionTree),
    #[serde(rename = "adaboost")]
    AdaBoost(AdaBoost),
}

impl BaseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            BaseModel::Tree(t) => t.validate(),
            BaseModel::AdaBoost(a) => a.stages().iter().try_for_each(|s| s.tree.validate()),
        }
    }
}

impl ProbabilisticClassifier for BaseModel {
    fn n_features(&self) -> usize {
        match self {
            BaseModel::Tree(t) => t.n_features(),
            BaseModel::AdaBoost(a) => a.n_features(),
        }
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        match self {
            BaseModel::Tree(t) => t.predict_proba(x),
            BaseModel::AdaBoost(a) => a.predict_proba(x),
        }
    }
}

impl Learner for BaseLearner {
    type Model = BaseModel;

    fn fit(&self, data: &Dataset, _rng: &mut RandomSource) -> Result<BaseModel> {
        match self {
            BaseLearner::Tree(p) => DecisionTree::fit(data, None, p).map(BaseModel::Tree),
            BaseLearner::AdaBoost(p) => AdaBoost::fit(data, p).map(BaseModel::AdaBoost),
        }
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialized_shape_is_tagged() {
        let d = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], 1, vec![0, 0, 1, 1]).unwrap();
        let learner = BaseLearner::AdaBoost(AdaBoostParams {
            n_estimators: 2,
            ..Default::default()
        });
        let model = learner.fit(&d, &mut RandomSource::new(0)).unwrap();
        let v = serde_json::to_value(&model).unwrap();
        assert_eq!(v["kind"], "adaboost");
        assert!(v["stages"].is_array());
        let back: BaseModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, model);

        let v = learner.describe();
        assert_eq!(v["kind"], "adaboost");
        assert_eq!(v["n_estimators"], 2);
    }
}
