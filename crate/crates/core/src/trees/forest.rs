use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grow_tree, AllFeatures, Criterion, LeafRule, RandomSubset, SplitTargets, TreeNode, TreeParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features considered per split; `None` means `ceil(sqrt(d))`.
    pub m_features: Option<usize>,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 100, max_depth: 12, m_features: None, bootstrap: true, min_samples_leaf: 1, seed: 42 }
    }
}

impl ForestParams {
    pub fn resolved_m_features(&self, d: usize) -> usize {
        self.m_features.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize).clamp(1, d.max(1))
    }
}

/// Bagged CART classifiers. Leaves hold the malicious fraction of the
/// training rows that reached them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub n_trees: usize,
    pub m_features: usize,
    pub bootstrap: bool,
    pub seed: u64,
    pub n_features: usize,
}

/// Tree `t` draws its bootstrap sample and per-node feature subsets from a
/// generator seeded with `seed + t`, so the forest does not depend on how
/// many threads build it.
pub fn train_random_forest(train: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be positive".into()));
    }
    let n = train.len();
    let d = train.dim();
    let m = params.resolved_m_features(d);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        criterion: Criterion::Gini,
    };
    let labels: &[Label] = &train.labels;

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let targets = SplitTargets::Classes(labels);
            let leaf = LeafRule::ClassFraction(labels);
            if m >= d {
                grow_tree(&train.features, &rows, &targets, &leaf, &tree_params, &mut AllFeatures)
            } else {
                let mut sampler = RandomSubset { m, rng: &mut rng };
                grow_tree(&train.features, &rows, &targets, &leaf, &tree_params, &mut sampler)
            }
        })
        .collect();

    Ok(ForestModel {
        trees,
        n_trees: params.n_trees,
        m_features: m,
        bootstrap: params.bootstrap,
        seed: params.seed,
        n_features: d,
    })
}

impl ForestModel {
    /// Mean leaf fraction across trees; label 1 iff that mean is at least 0.5.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, actual: x.len() });
        }
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict(x)?;
        }
        let confidence = sum / self.trees.len() as f64;
        Ok((Label::from(confidence >= 0.5), confidence))
    }

    /// Number of trees whose own leaf says malicious.
    pub fn malicious_votes(&self, x: &[f64]) -> Result<usize> {
        let mut votes = 0;
        for tree in &self.trees {
            votes += usize::from(tree.predict(x)? >= 0.5);
        }
        Ok(votes)
    }
}

pub fn predict_forest(model: &ForestModel, x: &[f64]) -> Result<(Label, f64)> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::grow_classification_tree;
    use crate::Matrix;

    fn separable() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 19.0;
            let label = u8::from(i >= 10);
            let offset = if label == 1 { 1.0 } else { -1.0 };
            rows.push([t * 2.0 - 1.0, offset + 0.3 * (t - 0.5)]);
            labels.push(label);
        }
        Dataset::new(
            Matrix::from_rows(2, rows).unwrap(),
            labels,
            (0..20).map(|i| format!("u{i}")).collect(),
        )
        .unwrap()
    }

    fn forest_with(trees: Vec<TreeNode>) -> ForestModel {
        ForestModel { n_trees: trees.len(), trees, m_features: 1, bootstrap: false, seed: 0, n_features: 1 }
    }

    #[test]
    fn unanimous_leaves() {
        let f = forest_with(vec![TreeNode::leaf(1.0), TreeNode::leaf(1.0)]);
        assert_eq!(predict_forest(&f, &[0.0]).unwrap(), (1, 1.0));
    }

    #[test]
    fn averaged_tie_is_malicious() {
        let f = forest_with(vec![TreeNode::leaf(0.2), TreeNode::leaf(0.8)]);
        assert_eq!(f.predict(&[0.0]).unwrap(), (1, 0.5));
        assert_eq!(f.malicious_votes(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn single_tree_forest_is_cart() {
        let ds = separable();
        let params = ForestParams { n_trees: 1, bootstrap: false, m_features: Some(2), ..Default::default() };
        let forest = train_random_forest(&ds, &params).unwrap();
        let cart = grow_classification_tree(&ds.features, &ds.labels, params.max_depth, 1);
        assert_eq!(forest.trees[0], cart);
    }

    #[test]
    fn separable_training_accuracy() {
        let ds = separable();
        let forest = train_random_forest(&ds, &ForestParams::default()).unwrap();
        assert_eq!(forest.trees.len(), 100);
        assert_eq!(forest.m_features, 2);
        for (row, &label) in ds.features.iter_rows().zip(&ds.labels) {
            assert_eq!(forest.predict(row).unwrap().0, label);
        }
        assert_eq!(train_random_forest(&ds, &ForestParams::default()).unwrap(), forest);
    }

    #[test]
    fn single_class_gives_constant_leaves() {
        let mut ds = separable();
        ds.labels = vec![0; 20];
        let forest = train_random_forest(&ds, &ForestParams { n_trees: 3, ..Default::default() }).unwrap();
        assert!(forest.trees.iter().all(|t| *t == TreeNode::leaf(0.0)));
    }

    #[test]
    fn depth_bound() {
        let ds = separable();
        let params = ForestParams { n_trees: 10, max_depth: 1, ..Default::default() };
        let forest = train_random_forest(&ds, &params).unwrap();
        assert!(forest.trees.iter().all(|t| t.depth() <= 1));
    }
}
