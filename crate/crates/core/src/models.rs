//! The five classifier families behind one interface.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::knn::{KnnModel, DEFAULT_K};
use crate::neural::{train_mlp, MlpModel, TrainConfig};
use crate::trees::{
    train_gradient_boosting, train_random_forest, train_xgb, BoostedModel, BoostingVariant, ForestModel,
    ForestParams, GradientBoostingParams, XgbParams,
};
use crate::{Label, Matrix};

/// Declaration order is the comparison-table row order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Mlp,
    Knn,
    Xgb,
    GradientBoosting,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Mlp,
        ClassifierKind::Knn,
        ClassifierKind::Xgb,
        ClassifierKind::GradientBoosting,
        ClassifierKind::RandomForest,
    ];

    /// Label used in reports and the comparison CSV.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::Knn => "K-NN",
            ClassifierKind::Xgb => "XGB",
            ClassifierKind::GradientBoosting => "Gradient Boosting",
            ClassifierKind::RandomForest => "Random Forest",
        }
    }

    /// Short name accepted on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Xgb => "xgb",
            ClassifierKind::GradientBoosting => "gb",
            ClassifierKind::RandomForest => "rf",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.short_name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown classifier `{s}` (expected mlp|knn|xgb|gb|rf)")))
    }
}

/// Hyperparameters for every family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub mlp: TrainConfig,
    pub knn_k: usize,
    pub xgb: XgbParams,
    pub gradient_boosting: GradientBoostingParams,
    pub forest: ForestParams,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            mlp: TrainConfig::mlp_default(),
            knn_k: DEFAULT_K,
            xgb: XgbParams::default(),
            gradient_boosting: GradientBoostingParams::default(),
            forest: ForestParams::default(),
        }
    }
}

impl ClassifierParams {
    /// Points every seeded trainer at `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mlp.seed = seed;
        self.forest.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Classifier {
    Mlp(MlpModel),
    Knn(KnnModel),
    Boosted(BoostedModel),
    RandomForest(ForestModel),
}

impl Classifier {
    pub fn train(kind: ClassifierKind, train: &Dataset, params: &ClassifierParams) -> Result<Self> {
        Ok(match kind {
            ClassifierKind::Mlp => Classifier::Mlp(train_mlp(train, &params.mlp)?),
            ClassifierKind::Knn => Classifier::Knn(KnnModel::fit(train, params.knn_k)?),
            ClassifierKind::Xgb => Classifier::Boosted(train_xgb(train, &params.xgb)?),
            ClassifierKind::GradientBoosting => {
                Classifier::Boosted(train_gradient_boosting(train, &params.gradient_boosting)?)
            }
            ClassifierKind::RandomForest => Classifier::RandomForest(train_random_forest(train, &params.forest)?),
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Mlp(_) => ClassifierKind::Mlp,
            Classifier::Knn(_) => ClassifierKind::Knn,
            Classifier::Boosted(m) => match m.variant {
                BoostingVariant::GradientBoosting => ClassifierKind::GradientBoosting,
                BoostingVariant::XgboostStyle => ClassifierKind::Xgb,
            },
            Classifier::RandomForest(_) => ClassifierKind::RandomForest,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Classifier::Mlp(m) => m.input_dim(),
            Classifier::Knn(m) => m.dim(),
            Classifier::Boosted(m) => m.n_features,
            Classifier::RandomForest(m) => m.n_features,
        }
    }

    /// Predicted label and malicious-class confidence in `[0, 1]`.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        match self {
            Classifier::Mlp(m) => m.predict(x),
            Classifier::Knn(m) => m.predict(x, m.default_k),
            Classifier::Boosted(m) => m.predict(x),
            Classifier::RandomForest(m) => m.predict(x),
        }
    }

    /// Row-wise predictions, computed in parallel, returned in row order.
    pub fn predict_all(&self, m: &Matrix) -> Result<Vec<(Label, f64)>> {
        (0..m.rows()).into_par_iter().map(|i| self.predict(m.row(i))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.short_name().parse::<ClassifierKind>().unwrap(), k);
        }
        assert!("svm".parse::<ClassifierKind>().is_err());
        let names: Vec<_> = ClassifierKind::ALL.iter().map(|k| k.display_name()).collect();
        assert_eq!(names, ["MLP", "K-NN", "XGB", "Gradient Boosting", "Random Forest"]);
    }
}
