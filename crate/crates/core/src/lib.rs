//! Self-paced ensemble learning for highly imbalanced binary classification.
//!
//! The crate trains under-sampling ensembles (self-paced, EasyEnsemble-style
//! bagging and BalanceCascade) over any [`Learner`], ships a CART tree and an
//! AdaBoost learner, and provides imbalance-aware metrics, a checkerboard
//! data generator and the benchmark suites used by the `spe` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod data;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod hardness;
pub mod learners;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod sampling;

pub use dataset::Dataset;
pub use ensemble::{fit_method, Method, MethodConfig, Trained};
pub use error::{Result, SpeError};
pub use hardness::HardnessFunction;
pub use learners::{AdaBoost, AdaBoostParams, BaseLearner, BaseModel, DecisionTree, DecisionTreeParams};
pub use model::{predict_dataset, EnsembleModel, Learner, PartialEnsemble, ProbabilisticClassifier};
pub use rng::RandomSource;
