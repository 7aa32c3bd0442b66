//! Log-loss boosting with regression trees.
//!
//! Both variants start from the training log-odds and add one tree per
//! round, using `g = p - y` and `h = p (1 - p)` at the current scores.
//!
//! * Gradient boosting grows each tree by least squares on the residuals
//!   `y - p` (the second-order criterion with unit hessians and no
//!   regularization is exactly that), then sets each leaf to a single Newton
//!   step `sum(y - p) / sum(p (1 - p))`.
//! * The regularized variant scores splits with the true hessians, `lambda`
//!   and `gamma`, and sets leaves to `-G / (H + lambda)`.

use serde::{Deserialize, Serialize};

use super::{grow_tree, AllFeatures, Criterion, LeafRule, SplitTargets, TreeNode, TreeParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::{sigmoid, Label, Matrix};

/// `1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l)] - gamma`.
pub fn xgb_split_gain(g_left: f64, h_left: f64, g_right: f64, h_right: f64, lambda: f64, gamma: f64) -> f64 {
    let g = g_left + g_right;
    let h = h_left + h_right;
    0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda) - g * g / (h + lambda))
        - gamma
}

/// `-G / (H + lambda)`; zero when the denominator vanishes.
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let denom = h + lambda;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

/// Mean binary cross-entropy, probabilities clipped to `[1e-15, 1 - 1e-15]`.
pub fn log_loss(labels: &[Label], probabilities: &[f64]) -> f64 {
    let eps = 1e-15;
    let total: f64 = labels
        .iter()
        .zip(probabilities)
        .map(|(&y, &p)| {
            let p = p.clamp(eps, 1.0 - eps);
            if y == crate::MALICIOUS {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    total / labels.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostingVariant {
    GradientBoosting,
    XgboostStyle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub variant: BoostingVariant,
    /// Training log-odds.
    pub init_score: f64,
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    pub regularization: Option<Regularization>,
    pub n_features: usize,
}

impl BoostedModel {
    /// `init_score + learning_rate * sum(tree outputs)`.
    pub fn raw_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, actual: x.len() });
        }
        let mut sum = 0.0;
        for t in &self.trees {
            sum += t.predict(x)?;
        }
        Ok(self.init_score + self.learning_rate * sum)
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        let p = sigmoid(self.raw_score(x)?);
        Ok((Label::from(p >= 0.5), p))
    }

    pub fn predict_proba_all(&self, m: &Matrix) -> Result<Vec<f64>> {
        m.iter_rows().map(|r| self.predict(r).map(|p| p.1)).collect()
    }
}

pub fn predict_boosted(model: &BoostedModel, x: &[f64]) -> Result<(Label, f64)> {
    model.predict(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GradientBoostingParams {
    fn default() -> Self {
        GradientBoostingParams { n_rounds: 100, learning_rate: 0.1, max_depth: 3, min_samples_leaf: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XgbParams {
    pub n_rounds: usize,
    pub eta: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_samples_leaf: usize,
}

impl Default for XgbParams {
    fn default() -> Self {
        XgbParams { n_rounds: 100, eta: 0.3, max_depth: 6, lambda: 1.0, gamma: 0.0, min_samples_leaf: 1 }
    }
}

fn base_log_odds(train: &Dataset) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassTrainingSet);
    }
    let [neg, pos] = train.class_counts();
    Ok((pos as f64 / neg as f64).ln())
}

struct RoundSpec {
    n_rounds: usize,
    learning_rate: f64,
    tree: TreeParams,
    leaf_lambda: f64,
    unit_split_hessian: bool,
}

fn boost(train: &Dataset, spec: &RoundSpec) -> Result<(f64, Vec<TreeNode>)> {
    let init = base_log_odds(train)?;
    let n = train.len();
    let rows: Vec<usize> = (0..n).collect();
    let ones = vec![1.0; n];
    let mut scores = vec![init; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(spec.n_rounds);

    for _ in 0..spec.n_rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - f64::from(train.labels[i]);
            hess[i] = p * (1.0 - p);
        }
        let split_hess: &[f64] = if spec.unit_split_hessian { &ones } else { &hess };
        let targets = SplitTargets::GradHess { grad: &grad, hess: split_hess };
        let leaf = LeafRule::Newton { grad: &grad, hess: &hess, lambda: spec.leaf_lambda };
        let tree = grow_tree(&train.features, &rows, &targets, &leaf, &spec.tree, &mut AllFeatures);
        for (i, s) in scores.iter_mut().enumerate() {
            *s += spec.learning_rate * tree.predict(train.features.row(i))?;
        }
        trees.push(tree);
    }
    Ok((init, trees))
}

pub fn train_gradient_boosting(train: &Dataset, params: &GradientBoostingParams) -> Result<BoostedModel> {
    let spec = RoundSpec {
        n_rounds: params.n_rounds,
        learning_rate: params.learning_rate,
        tree: TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            criterion: Criterion::SecondOrder { lambda: 0.0, gamma: 0.0 },
        },
        leaf_lambda: 0.0,
        unit_split_hessian: true,
    };
    let (init_score, trees) = boost(train, &spec)?;
    Ok(BoostedModel {
        variant: BoostingVariant::GradientBoosting,
        init_score,
        trees,
        learning_rate: params.learning_rate,
        regularization: None,
        n_features: train.dim(),
    })
}

pub fn train_xgb(train: &Dataset, params: &XgbParams) -> Result<BoostedModel> {
    if params.lambda < 0.0 || params.gamma < 0.0 {
        return Err(Error::InvalidConfig("lambda and gamma must be non-negative".into()));
    }
    let spec = RoundSpec {
        n_rounds: params.n_rounds,
        learning_rate: params.eta,
        tree: TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            criterion: Criterion::SecondOrder { lambda: params.lambda, gamma: params.gamma },
        },
        leaf_lambda: params.lambda,
        unit_split_hessian: false,
    };
    let (init_score, trees) = boost(train, &spec)?;
    Ok(BoostedModel {
        variant: BoostingVariant::XgboostStyle,
        init_score,
        trees,
        learning_rate: params.eta,
        regularization: Some(Regularization { lambda: params.lambda, gamma: params.gamma }),
        n_features: train.dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: &[[f64; 2]], labels: &[Label]) -> Dataset {
        Dataset::new(
            Matrix::from_rows(2, rows).unwrap(),
            labels.to_vec(),
            (0..labels.len()).map(|i| format!("u{i}")).collect(),
        )
        .unwrap()
    }

    fn noisy() -> Dataset {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [(i % 7) as f64, (i % 5) as f64 * 0.5]).collect();
        let labels: Vec<Label> = (0..40).map(|i| u8::from((i % 7) + (i % 3) > 4)).collect();
        dataset(&rows, &labels)
    }

    #[test]
    fn gain_worked_example() {
        assert!((xgb_split_gain(2.0, 2.0, -2.0, 2.0, 1.0, 0.0) - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(leaf_weight(0.0, 3.0, 1.0), 0.0);
        assert_eq!(leaf_weight(0.0, 0.0, 0.0), 0.0);
        assert_eq!(leaf_weight(2.0, 1.0, 1.0), -1.0);
    }

    #[test]
    fn balanced_init_is_zero() {
        let ds = dataset(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], &[0, 1, 0, 1]);
        let m = train_gradient_boosting(&ds, &GradientBoostingParams { n_rounds: 0, ..Default::default() }).unwrap();
        assert_eq!(m.init_score, 0.0);
        assert!(m.trees.is_empty());
        assert_eq!(predict_boosted(&m, &[5.0, 5.0]).unwrap(), (1, 0.5));
    }

    #[test]
    fn zero_rounds_predict_base_rate() {
        let ds = noisy();
        let m = train_xgb(&ds, &XgbParams { n_rounds: 0, ..Default::default() }).unwrap();
        let [neg, pos] = ds.class_counts();
        let rate = pos as f64 / (neg + pos) as f64;
        for row in ds.features.iter_rows() {
            assert!((m.predict(row).unwrap().1 - rate).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_gamma_gives_stumps() {
        let ds = noisy();
        let m = train_xgb(&ds, &XgbParams { n_rounds: 3, gamma: 1e9, ..Default::default() }).unwrap();
        assert!(m.trees.iter().all(|t| matches!(t, TreeNode::Leaf { .. })));
    }

    #[test]
    fn both_variants_reduce_log_loss() {
        let ds = noisy();
        let [neg, pos] = ds.class_counts();
        let rate = pos as f64 / (neg + pos) as f64;
        let baseline = log_loss(&ds.labels, &vec![rate; ds.len()]);
        let gb = train_gradient_boosting(&ds, &GradientBoostingParams::default()).unwrap();
        let xgb = train_xgb(&ds, &XgbParams::default()).unwrap();
        for m in [&gb, &xgb] {
            let loss = log_loss(&ds.labels, &m.predict_proba_all(&ds.features).unwrap());
            assert!(loss < baseline, "{:?}: {loss} vs {baseline}", m.variant);
            assert!(m.trees.iter().all(|t| t.depth() <= if m.variant == BoostingVariant::GradientBoosting { 3 } else { 6 }));
        }
    }

    #[test]
    fn single_class_rejected() {
        let ds = dataset(&[[0.0, 0.0], [1.0, 1.0]], &[1, 1]);
        assert!(matches!(
            train_gradient_boosting(&ds, &Default::default()),
            Err(Error::SingleClassTrainingSet)
        ));
        assert!(matches!(train_xgb(&ds, &Default::default()), Err(Error::SingleClassTrainingSet)));
    }

    #[test]
    fn positive_tree_never_lowers_confidence() {
        let ds = noisy();
        let mut m = train_gradient_boosting(&ds, &GradientBoostingParams { n_rounds: 5, ..Default::default() }).unwrap();
        let x = [3.0, 1.0];
        let before = m.predict(&x).unwrap().1;
        m.trees.push(TreeNode::Internal {
            feature_index: 0,
            threshold: 2.0,
            left: Box::new(TreeNode::leaf(0.1)),
            right: Box::new(TreeNode::leaf(0.7)),
        });
        assert!(m.predict(&x).unwrap().1 >= before);
    }
}
