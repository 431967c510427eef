use crate::error::{Result, SpeError};

/// Dense binary-labelled dataset. Label `1` is the minority (positive) class.
///
/// Features are stored row-major. The minority and majority index views are
/// computed once at construction and always partition `0..n_rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<u8>,
    feature_names: Option<Vec<String>>,
    minority: Vec<usize>,
    majority: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<u8>) -> Result<Self> {
        if n_features == 0 {
            return Err(SpeError::InvalidInput(
                "dataset must have at least one feature".into(),
            ));
        }
        if features.len() != labels.len() * n_features {
            return Err(SpeError::InvalidInput(format!(
                "{} feature values do not form {} rows of {} columns",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(SpeError::Label(format!(
                "labels must be 0 or 1, found {bad}"
            )));
        }
        let (mut minority, mut majority) = (Vec::new(), Vec::new());
        for (i, &y) in labels.iter().enumerate() {
            if y == 1 {
                minority.push(i);
            } else {
                majority.push(i);
            }
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
            feature_names: None,
            minority,
            majority,
        })
    }

    /// Build from a slice of rows; every row must have the same arity.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != n_features) {
            return Err(SpeError::Dimension {
                expected: n_features,
                got: r.len(),
            });
        }
        Dataset::new(rows.concat(), n_features, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(SpeError::InvalidInput(format!(
                "{} feature names for {} columns",
                names.len(),
                self.n_features
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.n_features + col]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn minority_indices(&self) -> &[usize] {
        &self.minority
    }

    pub fn majority_indices(&self) -> &[usize] {
        &self.majority
    }

    pub fn n_minority(&self) -> usize {
        self.minority.len()
    }

    pub fn n_majority(&self) -> usize {
        self.majority.len()
    }

    /// `|majority| / |minority|`; `None` when there are no minority rows.
    pub fn imbalance_ratio(&self) -> Option<f64> {
        if self.minority.is_empty() {
            None
        } else {
            Some(self.majority.len() as f64 / self.minority.len() as f64)
        }
    }

    pub fn has_both_classes(&self) -> bool {
        !self.minority.is_empty() && !self.majority.is_empty()
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.has_both_classes() {
            Ok(())
        } else {
            Err(SpeError::InvalidInput(format!(
                "training data must contain both classes (minority {}, majority {})",
                self.n_minority(),
                self.n_majority()
            )))
        }
    }

    /// New dataset made of the given rows, in the given order. Repeats are allowed.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Dataset::new(features, self.n_features, labels)
            .expect("subset of a valid dataset is valid");
        out.feature_names = self.feature_names.clone();
        out
    }

    pub(crate) fn features_mut(&mut self) -> &mut [f64] {
        &mut self.features
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dataset {
        Dataset::from_rows(
            &[vec![0.0, 1.0], vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]],
            vec![0, 1, 0, 0],
        )
        .unwrap()
    }

    #[test]
    fn index_views_partition_rows() {
        let d = small();
        assert_eq!(d.minority_indices(), &[1]);
        assert_eq!(d.majority_indices(), &[0, 2, 3]);
        assert_eq!(d.imbalance_ratio(), Some(3.0));
    }

    #[test]
    fn rejects_bad_labels_and_shapes() {
        assert!(matches!(
            Dataset::new(vec![1.0, 2.0], 1, vec![0, 2]),
            Err(SpeError::Label(_))
        ));
        assert!(matches!(
            Dataset::new(vec![1.0, 2.0, 3.0], 2, vec![0, 1]),
            Err(SpeError::InvalidInput(_))
        ));
    }

    #[test]
    fn ratio_undefined_without_minority() {
        let d = Dataset::new(vec![1.0, 2.0], 1, vec![0, 0]).unwrap();
        assert_eq!(d.imbalance_ratio(), None);
        assert!(d.require_both_classes().is_err());
    }

    #[test]
    fn subset_copies_rows_in_order() {
        let d = small();
        let s = d.subset(&[3, 1, 1]);
        assert_eq!(s.row(0), &[3.0, 4.0]);
        assert_eq!(s.labels(), &[0, 1, 1]);
        assert_eq!(s.n_minority(), 2);
    }
}
