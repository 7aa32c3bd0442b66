//! CART trees and the ensembles built from them.
//!
//! Split search is exact: every candidate feature is sorted within the node
//! and every midpoint between consecutive distinct values is scored. Rows
//! with `x[feature] < threshold` go left, everything else (ties included)
//! goes right.

mod boosting;
mod forest;

pub use boosting::{
    leaf_weight, log_loss, predict_boosted, train_gradient_boosting, train_xgb, xgb_split_gain, BoostedModel,
    BoostingVariant, GradientBoostingParams, Regularization, XgbParams,
};
pub use forest::{predict_forest, train_random_forest, ForestModel, ForestParams};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Label, Matrix, MALICIOUS};

/// Splits must beat this gain to be accepted. Keeps float noise on
/// zero-gain candidates from growing useless branches.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Internal {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(value: f64) -> Self {
        TreeNode::Leaf { value }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return Ok(*value),
                TreeNode::Internal { feature_index, threshold, left, right } => {
                    let v = *x
                        .get(*feature_index)
                        .ok_or(Error::DimensionMismatch { expected: feature_index + 1, actual: x.len() })?;
                    node = if v < *threshold { left } else { right };
                }
            }
        }
    }

    /// Every leaf value, left to right.
    pub fn leaf_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            match n {
                TreeNode::Leaf { value } => out.push(*value),
                TreeNode::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }
}

pub fn predict_tree(tree: &TreeNode, x: &[f64]) -> Result<f64> {
    tree.predict(x)
}

/// `1 - p0^2 - p1^2` for a node holding `counts = [benign, malicious]`.
pub fn gini(counts: [usize; 2]) -> Result<f64> {
    let total = counts[0] + counts[1];
    if total == 0 {
        return Err(Error::EmptyNode);
    }
    Ok(gini_unchecked(counts))
}

#[inline]
fn gini_unchecked(counts: [usize; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    let p0 = counts[0] as f64 / total;
    let p1 = counts[1] as f64 / total;
    1.0 - p0 * p0 - p1 * p1
}

/// Gini decrease of splitting `parent` into `left` and `right`, children
/// weighted by their share of the rows.
pub fn gini_gain(left: [usize; 2], right: [usize; 2]) -> f64 {
    let parent = [left[0] + right[0], left[1] + right[1]];
    let n = (parent[0] + parent[1]) as f64;
    let nl = (left[0] + left[1]) as f64;
    let nr = (right[0] + right[1]) as f64;
    gini_unchecked(parent) - (nl / n) * gini_unchecked(left) - (nr / n) * gini_unchecked(right)
}

/// Per-row quantities a split is scored on, indexed by global row index.
#[derive(Clone, Copy, Debug)]
pub enum SplitTargets<'a> {
    Classes(&'a [Label]),
    GradHess { grad: &'a [f64], hess: &'a [f64] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Criterion {
    Gini,
    /// Regularized second-order gain; see [`xgb_split_gain`].
    SecondOrder { lambda: f64, gamma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitDecision {
    pub feature_index: usize,
    pub threshold: f64,
    pub gain: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Stats {
    counts: [usize; 2],
    grad: f64,
    hess: f64,
}

impl Stats {
    fn add(&mut self, row: usize, targets: &SplitTargets) {
        match targets {
            SplitTargets::Classes(labels) => self.counts[usize::from(labels[row] == MALICIOUS)] += 1,
            SplitTargets::GradHess { grad, hess } => {
                self.grad += grad[row];
                self.hess += hess[row];
            }
        }
    }

    fn sub(&self, other: &Stats) -> Stats {
        Stats {
            counts: [self.counts[0] - other.counts[0], self.counts[1] - other.counts[1]],
            grad: self.grad - other.grad,
            hess: self.hess - other.hess,
        }
    }
}

fn score(criterion: Criterion, left: &Stats, right: &Stats) -> f64 {
    match criterion {
        Criterion::Gini => gini_gain(left.counts, right.counts),
        Criterion::SecondOrder { lambda, gamma } => {
            xgb_split_gain(left.grad, left.hess, right.grad, right.hess, lambda, gamma)
        }
    }
}

/// Highest-gain split of `rows` over `candidate_features`.
///
/// Ties go to the lower feature index, then the lower threshold. Returns
/// `Ok(None)` when no candidate gains more than [`MIN_GAIN`] or leaves at
/// least `min_samples_leaf` rows on both sides.
pub fn best_split(
    features: &Matrix,
    rows: &[usize],
    targets: &SplitTargets,
    candidate_features: &[usize],
    criterion: Criterion,
    min_samples_leaf: usize,
) -> Result<Option<SplitDecision>> {
    if rows.len() < 2 {
        return Err(Error::TooFewRows(rows.len()));
    }
    let min_leaf = min_samples_leaf.max(1);
    let mut total = Stats::default();
    for &r in rows {
        total.add(r, targets);
    }
    let mut candidates = candidate_features.to_vec();
    candidates.sort_unstable();
    candidates.dedup();

    let mut best: Option<SplitDecision> = None;
    let mut sorted = rows.to_vec();
    for &f in &candidates {
        if f >= features.cols() {
            return Err(Error::DimensionMismatch { expected: features.cols(), actual: f + 1 });
        }
        sorted.sort_by(|&a, &b| features.get(a, f).total_cmp(&features.get(b, f)));
        let mut left = Stats::default();
        for i in 0..sorted.len() - 1 {
            left.add(sorted[i], targets);
            let (lo, hi) = (features.get(sorted[i], f), features.get(sorted[i + 1], f));
            let n_left = i + 1;
            if lo == hi || n_left < min_leaf || sorted.len() - n_left < min_leaf {
                continue;
            }
            let right = total.sub(&left);
            let gain = score(criterion, &left, &right);
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitDecision { feature_index: f, threshold: midpoint(lo, hi), gain });
            }
        }
    }
    Ok(best)
}

/// Midpoint of `lo < hi`, nudged to `hi` if rounding would put it at `lo`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = (lo + hi) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
}

/// How leaf values are computed from the rows that reach a leaf.
#[derive(Clone, Copy, Debug)]
pub enum LeafRule<'a> {
    /// Fraction of malicious labels.
    ClassFraction(&'a [Label]),
    /// `-sum(grad) / (sum(hess) + lambda)`, or 0 when the denominator is 0.
    Newton { grad: &'a [f64], hess: &'a [f64], lambda: f64 },
}

impl LeafRule<'_> {
    fn value(&self, rows: &[usize]) -> f64 {
        match *self {
            LeafRule::ClassFraction(labels) => {
                let pos = rows.iter().filter(|&&r| labels[r] == MALICIOUS).count();
                pos as f64 / rows.len() as f64
            }
            LeafRule::Newton { grad, hess, lambda } => {
                let g: f64 = rows.iter().map(|&r| grad[r]).sum();
                let h: f64 = rows.iter().map(|&r| hess[r]).sum();
                leaf_weight(g, h, lambda)
            }
        }
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        match *self {
            LeafRule::ClassFraction(labels) => rows.iter().all(|&r| labels[r] == labels[rows[0]]),
            LeafRule::Newton { .. } => false,
        }
    }
}

/// Chooses which features a node may split on.
pub trait FeatureSampler {
    fn candidates(&mut self, n_features: usize) -> Vec<usize>;
}

pub struct AllFeatures;

impl FeatureSampler for AllFeatures {
    fn candidates(&mut self, n_features: usize) -> Vec<usize> {
        (0..n_features).collect()
    }
}

/// `m` distinct features drawn uniformly per node.
pub struct RandomSubset<'r, R: Rng> {
    pub m: usize,
    pub rng: &'r mut R,
}

impl<R: Rng> FeatureSampler for RandomSubset<'_, R> {
    fn candidates(&mut self, n_features: usize) -> Vec<usize> {
        if self.m >= n_features {
            return (0..n_features).collect();
        }
        let mut picked = rand::seq::index::sample(self.rng, n_features, self.m).into_vec();
        picked.sort_unstable();
        picked
    }
}

/// Grows a tree on `rows` (indices into `features`, repeats allowed).
///
/// Splitting stops at a pure node, at `max_depth`, when a node has fewer
/// than `2 * min_samples_leaf` rows, or when no split has positive gain.
pub fn grow_tree(
    features: &Matrix,
    rows: &[usize],
    targets: &SplitTargets,
    leaf: &LeafRule,
    params: &TreeParams,
    sampler: &mut dyn FeatureSampler,
) -> TreeNode {
    grow(features, rows, targets, leaf, params, sampler, 0)
}

fn grow(
    features: &Matrix,
    rows: &[usize],
    targets: &SplitTargets,
    leaf: &LeafRule,
    params: &TreeParams,
    sampler: &mut dyn FeatureSampler,
    depth: usize,
) -> TreeNode {
    let make_leaf = || TreeNode::leaf(if rows.is_empty() { 0.0 } else { leaf.value(rows) });
    let min_leaf = params.min_samples_leaf.max(1);
    if depth >= params.max_depth || rows.len() < 2 * min_leaf || leaf.is_pure(rows) {
        return make_leaf();
    }
    let candidates = sampler.candidates(features.cols());
    let split = match best_split(features, rows, targets, &candidates, params.criterion, min_leaf) {
        Ok(Some(s)) => s,
        _ => return make_leaf(),
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| features.get(r, split.feature_index) < split.threshold);
    let left = grow(features, &left_rows, targets, leaf, params, sampler, depth + 1);
    let right = grow(features, &right_rows, targets, leaf, params, sampler, depth + 1);
    TreeNode::Internal {
        feature_index: split.feature_index,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Plain CART classifier on every row with all features considered.
pub fn grow_classification_tree(features: &Matrix, labels: &[Label], max_depth: usize, min_samples_leaf: usize) -> TreeNode {
    let rows: Vec<usize> = (0..features.rows()).collect();
    let params = TreeParams { max_depth, min_samples_leaf, criterion: Criterion::Gini };
    grow_tree(
        features,
        &rows,
        &SplitTargets::Classes(labels),
        &LeafRule::ClassFraction(labels),
        &params,
        &mut AllFeatures,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Matrix {
        Matrix::from_rows(1, values.iter().map(|v| [*v])).unwrap()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini([2, 2]).unwrap(), 0.5);
        assert_eq!(gini([4, 0]).unwrap(), 0.0);
        assert_eq!(gini([3, 1]).unwrap(), 0.375);
        assert!(matches!(gini([0, 0]), Err(Error::EmptyNode)));
    }

    #[test]
    fn two_point_split() {
        let x = column(&[0.0, 1.0]);
        let labels = [0, 1];
        let s = best_split(&x, &[0, 1], &SplitTargets::Classes(&labels), &[0], Criterion::Gini, 1)
            .unwrap()
            .unwrap();
        assert_eq!(s, SplitDecision { feature_index: 0, threshold: 0.5, gain: 0.5 });
    }

    #[test]
    fn pure_set_has_no_split() {
        let x = column(&[0.0, 1.0, 2.0]);
        let labels = [1, 1, 1];
        let s = best_split(&x, &[0, 1, 2], &SplitTargets::Classes(&labels), &[0], Criterion::Gini, 1).unwrap();
        assert!(s.is_none());
    }

    #[test]
    fn equal_gain_prefers_lower_feature() {
        let x = Matrix::from_rows(2, [[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let labels = [0, 1];
        let s = best_split(&x, &[0, 1], &SplitTargets::Classes(&labels), &[1, 0], Criterion::Gini, 1)
            .unwrap()
            .unwrap();
        assert_eq!(s.feature_index, 0);
    }

    #[test]
    fn too_few_rows() {
        let x = column(&[0.0]);
        let r = best_split(&x, &[0], &SplitTargets::Classes(&[0]), &[0], Criterion::Gini, 1);
        assert!(matches!(r, Err(Error::TooFewRows(1))));
    }

    #[test]
    fn min_samples_leaf_limits_candidates() {
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        let labels = [0, 1, 1, 1];
        let s = best_split(&x, &[0, 1, 2, 3], &SplitTargets::Classes(&labels), &[0], Criterion::Gini, 2)
            .unwrap()
            .unwrap();
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn growth_edge_cases() {
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(grow_classification_tree(&x, &[1, 1, 1, 1], 5, 1), TreeNode::leaf(1.0));
        assert_eq!(grow_classification_tree(&x, &[0, 1, 1, 1], 0, 1), TreeNode::leaf(0.75));

        let two = column(&[0.0, 1.0]);
        let t = grow_classification_tree(&two, &[0, 1], 5, 1);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.leaf_values(), vec![0.0, 1.0]);
        assert_eq!(predict_tree(&t, &[0.0]).unwrap(), 0.0);
        assert_eq!(predict_tree(&t, &[1.0]).unwrap(), 1.0);
        assert_eq!(predict_tree(&t, &[0.5]).unwrap(), 1.0, "ties route right");
    }

    #[test]
    fn leaf_ignores_input() {
        let t = TreeNode::leaf(0.25);
        assert_eq!(t.predict(&[]).unwrap(), 0.25);
        assert_eq!(t.predict(&[9.0, -9.0]).unwrap(), 0.25);
    }

    #[test]
    fn short_input_is_rejected() {
        let t = TreeNode::Internal {
            feature_index: 3,
            threshold: 0.0,
            left: Box::new(TreeNode::leaf(0.0)),
            right: Box::new(TreeNode::leaf(1.0)),
        };
        assert!(matches!(t.predict(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn random_subset_is_sorted_and_distinct() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut s = RandomSubset { m: 3, rng: &mut rng };
        for _ in 0..20 {
            let c = s.candidates(10);
            assert_eq!(c.len(), 3);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(s.candidates(2), vec![0, 1]);
    }
}
