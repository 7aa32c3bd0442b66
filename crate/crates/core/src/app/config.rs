//! Pipeline configuration: defaults, a flat `key = value` file format, and
//! per-key overrides (the CLI applies its flags through the same path).

use std::path::PathBuf;
use std::str::FromStr;

use crate::data::{LabelMapping, SplitConfig};
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::models::{ClassifierKind, ClassifierParams};
use crate::neural::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Winsorized, min-max scaled lexical features.
    Raw,
    /// Autoencoder latents of the scaled features.
    Latent,
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "raw" => Ok(FeatureMode::Raw),
            "latent" | "autoencoder_latent" => Ok(FeatureMode::Latent),
            other => Err(Error::InvalidConfig(format!("features must be raw|latent, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierChoice {
    One(ClassifierKind),
    All,
}

impl FromStr for ClassifierChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            Ok(ClassifierChoice::All)
        } else {
            s.parse().map(ClassifierChoice::One)
        }
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MAX_ROWS: usize = 50_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub features: FeatureMode,
    /// `None` lets each command pick: MLP for `train`, all five for `compare`.
    pub classifier: Option<ClassifierChoice>,
    pub seed: u64,
    pub test_fraction: f64,
    pub stratified: bool,
    /// Stratified subsample cap applied before splitting in `compare`.
    pub max_rows: usize,
    pub threshold: f64,
    pub extra_keywords: Vec<String>,
    pub labels: LabelMapping,
    pub autoencoder: TrainConfig,
    pub classifiers: ClassifierParams,
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub safe_list: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            features: FeatureMode::Latent,
            classifier: None,
            seed: 42,
            test_fraction: 0.2,
            stratified: true,
            max_rows: DEFAULT_MAX_ROWS,
            threshold: DEFAULT_THRESHOLD,
            extra_keywords: Vec::new(),
            labels: LabelMapping::default(),
            autoencoder: TrainConfig::autoencoder_default(),
            classifiers: ClassifierParams::default(),
            data: None,
            model: None,
            out: None,
            safe_list: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

impl PipelineConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are ignored;
    /// unknown keys are errors.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_kv_text(text)?;
        Ok(cfg)
    }

    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected `key = value`", no + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.classifiers;
        match key {
            "data" => self.data = Some(value.into()),
            "model" => self.model = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "safe_list" => self.safe_list = Some(value.into()),
            "seed" => self.seed = parse(key, value)?,
            "threshold" => {
                let t: f64 = parse(key, value)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::ThresholdOutOfRange(t));
                }
                self.threshold = t;
            }
            "features" => self.features = value.parse()?,
            "classifier" => self.classifier = Some(value.parse()?),
            "test_fraction" => self.test_fraction = parse(key, value)?,
            "stratified" => self.stratified = parse_bool(key, value)?,
            "max_rows" => self.max_rows = parse(key, value)?,
            "keywords" => {
                self.extra_keywords = value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
            }
            "ae_hidden" => self.autoencoder.hidden_sizes = parse_list(key, value)?,
            "ae_epochs" => self.autoencoder.epochs = parse(key, value)?,
            "ae_batch" => self.autoencoder.batch_size = parse(key, value)?,
            "ae_lr" => self.autoencoder.learning_rate = parse(key, value)?,
            "mlp_hidden" => c.mlp.hidden_sizes = parse_list(key, value)?,
            "mlp_epochs" => c.mlp.epochs = parse(key, value)?,
            "mlp_batch" => c.mlp.batch_size = parse(key, value)?,
            "mlp_lr" => c.mlp.learning_rate = parse(key, value)?,
            "knn_k" => c.knn_k = parse(key, value)?,
            "rf_trees" => c.forest.n_trees = parse(key, value)?,
            "rf_max_depth" => c.forest.max_depth = parse(key, value)?,
            "rf_m_features" => c.forest.m_features = Some(parse(key, value)?),
            "rf_bootstrap" => c.forest.bootstrap = parse_bool(key, value)?,
            "rf_min_samples_leaf" => c.forest.min_samples_leaf = parse(key, value)?,
            "gb_rounds" => c.gradient_boosting.n_rounds = parse(key, value)?,
            "gb_learning_rate" => c.gradient_boosting.learning_rate = parse(key, value)?,
            "gb_max_depth" => c.gradient_boosting.max_depth = parse(key, value)?,
            "gb_min_samples_leaf" => c.gradient_boosting.min_samples_leaf = parse(key, value)?,
            "xgb_rounds" => c.xgb.n_rounds = parse(key, value)?,
            "xgb_eta" => c.xgb.eta = parse(key, value)?,
            "xgb_max_depth" => c.xgb.max_depth = parse(key, value)?,
            "xgb_lambda" => c.xgb.lambda = parse(key, value)?,
            "xgb_gamma" => c.xgb.gamma = parse(key, value)?,
            "xgb_min_samples_leaf" => c.xgb.min_samples_leaf = parse(key, value)?,
            _ => {
                if let Some(text) = key.strip_prefix("label.") {
                    let label = match value {
                        "0" => crate::BENIGN,
                        "1" => crate::MALICIOUS,
                        _ => return Err(Error::InvalidConfig(format!("label `{text}` must map to 0 or 1"))),
                    };
                    self.labels.insert(text, label);
                } else {
                    return Err(Error::InvalidConfig(format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }

    pub fn feature_spec(&self) -> Result<FeatureSpec> {
        FeatureSpec::default_with_extra(&self.extra_keywords)
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig { test_fraction: self.test_fraction, seed: self.seed, stratified: self.stratified }
    }

    pub fn autoencoder_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.autoencoder.clone() }
    }

    pub fn classifier_params(&self) -> ClassifierParams {
        self.classifiers.clone().with_seed(self.seed)
    }
}
