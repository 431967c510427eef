//! CART classification tree grown greedily on weighted Gini impurity.
//!
//! Nodes live in a flat arena; node 0 is the root and children always have
//! larger indices than their parent. Candidate thresholds are midpoints
//! between consecutive distinct values, scanned by ascending feature index
//! then ascending threshold, and a candidate replaces the incumbent only when
//! strictly better, so training is fully deterministic.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, SpeError};
use crate::model::{check_arity, ProbabilisticClassifier};

/// Below this, an impurity change is treated as rounding noise.
const IMPURITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_impurity_decrease: f64,
}

impl Default for DecisionTreeParams {
    fn default() -> Self {
        DecisionTreeParams {
            max_depth: 10,
            min_samples_split: 2,
            min_impurity_decrease: 0.0,
        }
    }
}

impl DecisionTreeParams {
    pub fn with_max_depth(max_depth: usize) -> Self {
        DecisionTreeParams {
            max_depth,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(SpeError::param("max_depth", "must be at least 1"));
        }
        if self.min_samples_split == 0 {
            return Err(SpeError::param("min_samples_split", "must be at least 1"));
        }
        if !(self.min_impurity_decrease >= 0.0) {
            return Err(SpeError::param(
                "min_impurity_decrease",
                "must be a nonnegative number",
            ));
        }
        Ok(())
    }
}

/// One record in the node arena.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes to `left`, otherwise `right`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { probability: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    n_features: usize,
    nodes: Vec<TreeNode>,
}

#[inline]
fn gini(total: f64, positive: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = positive / total;
    2.0 * p * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Builder<'a> {
    data: &'a Dataset,
    weights: Option<&'a [f64]>,
    params: DecisionTreeParams,
    nodes: Vec<TreeNode>,
    scratch: Vec<(f64, usize)>,
}

impl Builder<'_> {
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn totals(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(w, p), &i| {
            let wi = self.weight(i);
            (w + wi, p + wi * self.data.label(i) as f64)
        })
    }

    fn best_split(&mut self, idx: &[usize], total: f64, positive: f64) -> Option<Split> {
        let mut best: Option<Split> = None;
        let parent = gini(total, positive);
        for f in 0..self.data.n_features() {
            self.scratch.clear();
            self.scratch
                .extend(idx.iter().map(|&i| (self.data.value(i, f), i)));
            self.scratch
                .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let (mut wl, mut pl) = (0.0, 0.0);
            for k in 0..self.scratch.len() - 1 {
                let (v, i) = self.scratch[k];
                let wi = self.weights.map_or(1.0, |w| w[i]);
                wl += wi;
                pl += wi * self.data.label(i) as f64;
                let next = self.scratch[k + 1].0;
                if !(v < next) {
                    continue;
                }
                let (wr, pr) = (total - wl, positive - pl);
                let impurity = if total > 0.0 {
                    (wl * gini(wl, pl) + wr * gini(wr, pr)) / total
                } else {
                    0.0
                };
                if parent - impurity <= self.params.min_impurity_decrease + IMPURITY_EPS {
                    continue;
                }
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mut threshold = 0.5 * (v + next);
                    if !(threshold < next) {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let (total, positive) = self.totals(idx);
        let probability = if total > 0.0 {
            (positive / total).clamp(0.0, 1.0)
        } else {
            idx.iter().filter(|&&i| self.data.label(i) == 1).count() as f64 / idx.len() as f64
        };
        let slot = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            probability,
            samples: idx.len(),
        });

        let stop = depth >= self.params.max_depth
            || idx.len() < self.params.min_samples_split
            || idx.len() < 2
            || gini(total, positive) <= IMPURITY_EPS;
        if stop {
            return slot;
        }
        let Some(split) = self.best_split(idx, total, positive) else {
            return slot;
        };

        let mut cut = 0;
        for k in 0..idx.len() {
            if self.data.value(idx[k], split.feature) <= split.threshold {
                idx.swap(cut, k);
                cut += 1;
            }
        }
        let (lo, hi) = idx.split_at_mut(cut);
        lo.sort_unstable();
        hi.sort_unstable();
        let left = self.build(lo, depth + 1);
        let right = self.build(hi, depth + 1);
        self.nodes[slot] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

impl DecisionTree {
    /// Grows a tree on `data`, optionally weighting each row.
    ///
    /// Weights enter both the impurity and the leaf probabilities.
    pub fn fit(
        data: &Dataset,
        weights: Option<&[f64]>,
        params: &DecisionTreeParams,
    ) -> Result<DecisionTree> {
        params.validate()?;
        if data.is_empty() {
            return Err(SpeError::InvalidInput("cannot fit a tree on no rows".into()));
        }
        if let Some(w) = weights {
            if w.len() != data.n_rows() {
                return Err(SpeError::InvalidInput(format!(
                    "{} weights for {} rows",
                    w.len(),
                    data.n_rows()
                )));
            }
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(SpeError::InvalidInput(
                    "sample weights must be finite and nonnegative".into(),
                ));
            }
            if !(w.iter().sum::<f64>() > 0.0) {
                return Err(SpeError::InvalidInput("sample weights sum to zero".into()));
            }
        }
        let mut builder = Builder {
            data,
            weights,
            params: *params,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(data.n_rows()),
        };
        let mut idx: Vec<usize> = (0..data.n_rows()).collect();
        builder.build(&mut idx, 0);
        Ok(DecisionTree {
            n_features: data.n_features(),
            nodes: builder.nodes,
        })
    }

    /// Checks arena links so that prediction cannot loop or index out of bounds.
    pub fn from_nodes(n_features: usize, nodes: Vec<TreeNode>) -> Result<DecisionTree> {
        let tree = DecisionTree { n_features, nodes };
        tree.validate()?;
        Ok(tree)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(SpeError::InvalidModel("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    if feature >= self.n_features {
                        return Err(SpeError::InvalidModel(format!(
                            "node {i} splits on feature {feature} of {}",
                            self.n_features
                        )));
                    }
                    if left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len()
                    {
                        return Err(SpeError::InvalidModel(format!(
                            "node {i} has invalid children ({left}, {right})"
                        )));
                    }
                }
                TreeNode::Leaf { probability, .. } => {
                    if !(0.0..=1.0).contains(&probability) {
                        return Err(SpeError::InvalidModel(format!(
                            "leaf {i} probability {probability} outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                ref leaf => return leaf,
            }
        }
    }
}

impl ProbabilisticClassifier for DecisionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.n_features, x)?;
        match self.leaf_for(x) {
            TreeNode::Leaf { probability, .. } => Ok(*probability),
            TreeNode::Split { .. } => unreachable!("leaf_for stops at leaves"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_d(xs: &[f64], ys: &[u8]) -> Dataset {
        Dataset::new(xs.to_vec(), 1, ys.to_vec()).unwrap()
    }

    /// Weighted Gini of every single-threshold split, by enumeration.
    fn brute_force_best_split(xs: &[f64], ys: &[u8]) -> f64 {
        let mut sorted: Vec<f64> = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let n = xs.len() as f64;
        let impurity = |members: &[u8]| {
            if members.is_empty() {
                return 0.0;
            }
            let p = members.iter().filter(|&&y| y == 1).count() as f64 / members.len() as f64;
            1.0 - p * p - (1.0 - p) * (1.0 - p)
        };
        let mut best = f64::INFINITY;
        for w in sorted.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let left: Vec<u8> = xs.iter().zip(ys).filter(|(x, _)| **x <= t).map(|(_, y)| *y).collect();
            let right: Vec<u8> = xs.iter().zip(ys).filter(|(x, _)| **x > t).map(|(_, y)| *y).collect();
            let g = (left.len() as f64 * impurity(&left) + right.len() as f64 * impurity(&right)) / n;
            best = best.min(g);
        }
        best
    }

    fn training_accuracy(tree: &DecisionTree, d: &Dataset) -> f64 {
        let hits = (0..d.n_rows())
            .filter(|&i| {
                let p = tree.predict_proba(d.row(i)).unwrap();
                (p >= 0.5) == (d.label(i) == 1)
            })
            .count();
        hits as f64 / d.n_rows() as f64
    }

    #[test]
    fn separable_stump() {
        let d = one_d(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::with_max_depth(1)).unwrap();
        match *tree.root() {
            TreeNode::Split { threshold, .. } => assert!((2.0..3.0).contains(&threshold)),
            _ => panic!("expected a split"),
        }
        assert_eq!(training_accuracy(&tree, &d), 1.0);
        assert_eq!(tree.predict_proba(&[1.5]).unwrap(), 0.0);
    }

    #[test]
    fn pure_data_gives_single_leaf() {
        let d = one_d(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::default()).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.predict_proba(&[10.0]).unwrap(), 1.0);
    }

    #[test]
    fn alternating_labels_match_enumeration() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [0, 1, 0, 1];
        let oracle = brute_force_best_split(&xs, &ys);
        // frozen from the enumeration above: thresholds 1.5 and 3.5 both give 1/3
        assert!((oracle - 1.0 / 3.0).abs() < 1e-15);
        let d = one_d(&xs, &ys);
        let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::with_max_depth(1)).unwrap();
        let TreeNode::Split { threshold, left, right, .. } = *tree.root() else {
            panic!("expected a split");
        };
        // lowest threshold wins the tie
        assert_eq!(threshold, 1.5);
        let leaf = |i: usize| match tree.nodes()[i] {
            TreeNode::Leaf { probability, samples } => (probability, samples),
            _ => panic!(),
        };
        let (pl, nl) = leaf(left);
        let (pr, nr) = leaf(right);
        let achieved = (nl as f64 * 2.0 * pl * (1.0 - pl) + nr as f64 * 2.0 * pr * (1.0 - pr)) / 4.0;
        assert!((achieved - oracle).abs() < 1e-12);
    }

    #[test]
    fn leaf_probability_is_positive_fraction() {
        // depth 1 cannot separate the four left points, which hold 3 positives
        let d = one_d(&[1.0, 1.0, 1.0, 1.0, 5.0], &[1, 1, 1, 0, 0]);
        let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::with_max_depth(1)).unwrap();
        assert_eq!(tree.predict_proba(&[1.0]).unwrap(), 0.75);
        assert_eq!(tree.predict_proba(&[5.0]).unwrap(), 0.0);
    }

    #[test]
    fn weights_shift_leaf_probability() {
        let d = one_d(&[1.0, 1.0], &[1, 0]);
        let tree = DecisionTree::fit(&d, Some(&[3.0, 1.0]), &DecisionTreeParams::default()).unwrap();
        assert_eq!(tree.predict_proba(&[1.0]).unwrap(), 0.75);
    }

    #[test]
    fn errors() {
        let empty = Dataset::new(vec![], 1, vec![]).unwrap();
        assert!(matches!(
            DecisionTree::fit(&empty, None, &DecisionTreeParams::default()),
            Err(SpeError::InvalidInput(_))
        ));
        let d = one_d(&[1.0, 2.0], &[0, 1]);
        assert!(DecisionTree::fit(&d, Some(&[0.0, 0.0]), &DecisionTreeParams::default()).is_err());
        assert!(DecisionTree::fit(&d, None, &DecisionTreeParams::with_max_depth(0)).is_err());
        let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::default()).unwrap();
        assert!(matches!(
            tree.predict_proba(&[1.0, 2.0]),
            Err(SpeError::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn rejects_malformed_arena() {
        let nodes = vec![TreeNode::Split {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 1,
        }];
        assert!(DecisionTree::from_nodes(1, nodes).is_err());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let d = one_d(&[0.1, 0.2, 0.30000000000000004, 0.7], &[0, 1, 0, 1]);
        let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::default()).unwrap();
        let text = serde_json::to_string(&tree).unwrap();
        let back: DecisionTree = serde_json::from_str(&text).unwrap();
        assert_eq!(back, tree);
    }

    fn weighted_impurity_of_leaves(tree: &DecisionTree, d: &Dataset) -> f64 {
        // route every row to its leaf and total the leaf impurities
        let mut per_leaf = std::collections::HashMap::<usize, (f64, f64)>::new();
        for i in 0..d.n_rows() {
            let mut node = 0;
            while let TreeNode::Split { feature, threshold, left, right } = tree.nodes()[node] {
                node = if d.value(i, feature) <= threshold { left } else { right };
            }
            let e = per_leaf.entry(node).or_default();
            e.0 += 1.0;
            e.1 += d.label(i) as f64;
        }
        per_leaf.values().map(|&(w, p)| w * gini(w, p)).sum::<f64>() / d.n_rows() as f64
    }

    proptest! {
        #[test]
        fn training_never_increases_impurity(
            rows in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0u8..2), 2..60),
            depth in 1usize..8,
        ) {
            let feats: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
            let labels: Vec<u8> = rows.iter().map(|r| r.2).collect();
            let d = Dataset::from_rows(&feats, labels).unwrap();
            let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::with_max_depth(depth)).unwrap();
            let n = d.n_rows() as f64;
            let root = gini(n, d.n_minority() as f64);
            prop_assert!(weighted_impurity_of_leaves(&tree, &d) <= root + 1e-12);
            prop_assert!(tree.depth() <= depth);
        }

        #[test]
        fn unlimited_depth_fits_distinct_points(
            xs in prop::collection::btree_set(-1000i32..1000, 2..80),
            seed_labels in prop::collection::vec(0u8..2, 80),
        ) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let ys: Vec<u8> = seed_labels[..xs.len()].to_vec();
            let d = one_d(&xs, &ys);
            let tree = DecisionTree::fit(&d, None, &DecisionTreeParams::with_max_depth(usize::MAX)).unwrap();
            prop_assert_eq!(training_accuracy(&tree, &d), 1.0);
        }
    }
}
