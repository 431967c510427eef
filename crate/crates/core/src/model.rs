//! The classifier contract and the averaged ensemble built on top of it.

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::rng::RandomSource;

/// A trained model mapping a feature row to `P(y = 1 | x)` in `[0, 1]`.
///
/// Implementations must be immutable after training: the same row always
/// yields the same probability.
pub trait ProbabilisticClassifier: Send + Sync {
    fn n_features(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> Result<f64>;
}

impl<T: ProbabilisticClassifier + ?Sized> ProbabilisticClassifier for Box<T> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        (**self).predict_proba(x)
    }
}

/// Something that trains a [`ProbabilisticClassifier`] on a dataset.
pub trait Learner: Sync {
    type Model: ProbabilisticClassifier;

    fn fit(&self, data: &Dataset, rng: &mut RandomSource) -> Result<Self::Model>;

    /// Hyper-parameter echo stored in ensemble metadata.
    fn describe(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}

pub(crate) fn check_arity(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(SpeError::Dimension {
            expected,
            got: x.len(),
        })
    }
}

/// Scores every row of `data`, in row order.
pub fn predict_dataset<C>(model: &C, data: &Dataset) -> Result<Vec<f64>>
where
    C: ProbabilisticClassifier + ?Sized,
{
    if data.n_features() != model.n_features() {
        return Err(SpeError::Dimension {
            expected: model.n_features(),
            got: data.n_features(),
        });
    }
    (0..data.n_rows())
        .into_par_iter()
        .map(|i| model.predict_proba(data.row(i)))
        .collect()
}

fn mean_proba<M: ProbabilisticClassifier>(members: &[M], x: &[f64]) -> Result<f64> {
    let first = members
        .first()
        .ok_or_else(|| SpeError::InvalidModel("ensemble has no members".into()))?;
    check_arity(first.n_features(), x)?;
    let mut sum = 0.0;
    for m in members {
        sum += m.predict_proba(x)?;
    }
    Ok(sum / members.len() as f64)
}

/// Ordered base classifiers whose arithmetic mean is the ensemble score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel<M> {
    pub method: String,
    pub config: serde_json::Value,
    pub seed: u64,
    members: Vec<M>,
}

const FORMAT_TAG: &str = "spe-ensemble/1";

#[derive(Serialize)]
struct DocumentRef<'a, M> {
    format: &'static str,
    #[serde(flatten)]
    model: &'a EnsembleModel<M>,
}

#[derive(Deserialize)]
struct Document<M> {
    format: String,
    #[serde(flatten)]
    model: EnsembleModel<M>,
}

impl<M> EnsembleModel<M> {
    pub fn new(
        method: impl Into<String>,
        config: serde_json::Value,
        seed: u64,
        members: Vec<M>,
    ) -> Self {
        EnsembleModel {
            method: method.into(),
            config,
            seed,
            members,
        }
    }

    pub fn members(&self) -> &[M] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn into_members(self) -> Vec<M> {
        self.members
    }
}

impl<M: ProbabilisticClassifier> EnsembleModel<M> {
    /// Scorer averaging only the first `upto` members.
    pub fn partial(&self, upto: usize) -> Result<PartialEnsemble<'_, M>> {
        PartialEnsemble::new(&self.members, upto)
    }
}

impl<M: ProbabilisticClassifier> ProbabilisticClassifier for EnsembleModel<M> {
    fn n_features(&self) -> usize {
        self.members.first().map_or(0, |m| m.n_features())
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        mean_proba(&self.members, x)
    }
}

impl<M: Serialize> EnsembleModel<M> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&DocumentRef {
            format: FORMAT_TAG,
            model: self,
        })?)
    }
}

impl<M: DeserializeOwned> EnsembleModel<M> {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document<M> = serde_json::from_str(text)?;
        if doc.format != FORMAT_TAG {
            return Err(SpeError::InvalidModel(format!(
                "unsupported model format `{}` (expected `{FORMAT_TAG}`)",
                doc.format
            )));
        }
        if doc.model.members.is_empty() {
            return Err(SpeError::InvalidModel("ensemble has no members".into()));
        }
        Ok(doc.model)
    }
}

/// View over the first `upto` members of an ensemble under construction.
#[derive(Debug)]
pub struct PartialEnsemble<'a, M> {
    members: &'a [M],
}

impl<'a, M: ProbabilisticClassifier> PartialEnsemble<'a, M> {
    pub fn new(members: &'a [M], upto: usize) -> Result<Self> {
        if upto == 0 || upto > members.len() {
            return Err(SpeError::Range(format!(
                "partial ensemble size {upto} not in 1..={}",
                members.len()
            )));
        }
        Ok(PartialEnsemble {
            members: &members[..upto],
        })
    }
}

impl<M: ProbabilisticClassifier> ProbabilisticClassifier for PartialEnsemble<'_, M> {
    fn n_features(&self) -> usize {
        self.members[0].n_features()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        mean_proba(self.members, x)
    }
}
