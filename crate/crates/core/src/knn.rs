//! Exact k-nearest-neighbor classification with majority voting.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::{Label, Matrix, MALICIOUS};

pub const DEFAULT_K: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub stored_features: Matrix,
    pub stored_labels: Vec<Label>,
    pub default_k: usize,
}

/// A heap entry ordered by (squared distance, index), largest on top.
#[derive(PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KnnModel {
    pub fn new(stored_features: Matrix, stored_labels: Vec<Label>, default_k: usize) -> Result<Self> {
        if stored_labels.len() != stored_features.rows() {
            return Err(Error::DimensionMismatch { expected: stored_features.rows(), actual: stored_labels.len() });
        }
        if default_k == 0 || default_k > stored_labels.len() {
            return Err(Error::KOutOfRange { k: default_k, n: stored_labels.len() });
        }
        Ok(KnnModel { stored_features, stored_labels, default_k })
    }

    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        KnnModel::new(train.features.clone(), train.labels.clone(), k)
    }

    pub fn len(&self) -> usize {
        self.stored_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored_labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.stored_features.cols()
    }

    /// The `k` stored rows closest to `x` by Euclidean distance, nearest
    /// first. Equal distances are ordered by stored index.
    pub fn k_nearest(&self, x: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if k == 0 || k > self.len() {
            return Err(Error::KOutOfRange { k, n: self.len() });
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: x.len() });
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        for (index, row) in self.stored_features.iter_rows().enumerate() {
            let dist2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            let c = Candidate { dist2, index };
            if heap.len() < k {
                heap.push(c);
            } else if c < *heap.peek().expect("k > 0") {
                heap.pop();
                heap.push(c);
            }
        }
        Ok(heap.into_sorted_vec().into_iter().map(|c| (c.index, c.dist2.sqrt())).collect())
    }

    /// Majority label among the `k` nearest rows and the fraction of
    /// malicious votes. A split vote counts as malicious.
    pub fn predict(&self, x: &[f64], k: usize) -> Result<(Label, f64)> {
        let neighbors = self.k_nearest(x, k)?;
        let malicious = neighbors.iter().filter(|(i, _)| self.stored_labels[*i] == MALICIOUS).count();
        let label = Label::from(2 * malicious >= k);
        Ok((label, malicious as f64 / k as f64))
    }
}

pub fn k_nearest(model: &KnnModel, x: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
    model.k_nearest(x, k)
}

pub fn predict_knn(model: &KnnModel, x: &[f64], k: usize) -> Result<(Label, f64)> {
    model.predict(x, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(rows: &[[f64; 2]], labels: &[Label], k: usize) -> KnnModel {
        KnnModel::new(Matrix::from_rows(2, rows).unwrap(), labels.to_vec(), k).unwrap()
    }

    #[test]
    fn self_match_first() {
        let m = model(&[[1.0, 1.0], [2.0, 2.0], [5.0, 5.0]], &[0, 1, 1], 1);
        assert_eq!(m.k_nearest(&[2.0, 2.0], 1).unwrap(), vec![(1, 0.0)]);
    }

    #[test]
    fn three_four_five() {
        let m = model(&[[0.0, 0.0], [3.0, 4.0]], &[0, 1], 1);
        assert_eq!(m.k_nearest(&[0.0, 0.0], 2).unwrap(), vec![(0, 0.0), (1, 5.0)]);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let m = model(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], &[0, 1, 0], 1);
        let idx: Vec<usize> = m.k_nearest(&[0.0, 0.0], 3).unwrap().iter().map(|p| p.0).collect();
        assert_eq!(idx, vec![0, 1, 2]);
        assert_eq!(m.k_nearest(&[0.0, 0.0], 1).unwrap()[0].0, 0);
    }

    #[test]
    fn majority_vote() {
        let m = model(&[[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [9.0, 9.0]], &[1, 0, 1, 0], 3);
        let (label, conf) = m.predict(&[0.0, 0.0], 3).unwrap();
        assert_eq!(label, 1);
        assert!((conf - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.predict(&[0.1, 0.0], 1).unwrap(), (0, 0.0));
    }

    #[test]
    fn split_vote_is_malicious() {
        let m = model(&[[0.0, 0.0], [1.0, 0.0]], &[0, 1], 2);
        assert_eq!(predict_knn(&m, &[0.4, 0.0], 2).unwrap(), (1, 0.5));
    }

    #[test]
    fn argument_checks() {
        let m = model(&[[0.0, 0.0], [1.0, 0.0]], &[0, 1], 1);
        assert!(matches!(m.k_nearest(&[0.0, 0.0], 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(m.k_nearest(&[0.0, 0.0], 3), Err(Error::KOutOfRange { k: 3, n: 2 })));
        assert!(matches!(m.k_nearest(&[0.0], 1), Err(Error::DimensionMismatch { .. })));
        assert!(KnnModel::new(Matrix::zeros(2, 2), vec![0, 1], 3).is_err());
    }
}
