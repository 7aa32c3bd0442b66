//! Data loading and the fitted preprocessing chain shared by training,
//! evaluation and prediction.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{FeatureMode, PipelineConfig};
use crate::data::{
    apply_bounds, apply_scaler, bound_outliers, clean, fit_scaler, load_csv, map_labels, CleanReport, Dataset,
    OutlierBounds, Scaler,
};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureSpec};
use crate::neural::{train_autoencoder, AutoencoderModel, TrainConfig};
use crate::Matrix;

/// A featurized CSV plus what it took to get there.
#[derive(Clone, Debug)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub raw_rows: usize,
    pub cleaning: CleanReport,
    /// SHA-256 of the file bytes, hex.
    pub fingerprint: String,
}

/// load → clean → map labels → featurize.
pub fn load_dataset(path: &Path, spec: &FeatureSpec, cfg: &PipelineConfig) -> Result<LoadedData> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let fingerprint = hex::encode(Sha256::digest(&bytes));
    let records = load_csv(path)?;
    let raw_rows = records.len();
    let (records, cleaning) = clean(records);
    let labeled = map_labels(&records, &cfg.labels)?;
    let dataset = Dataset::from_labeled(&labeled, spec)?;
    Ok(LoadedData { dataset, raw_rows, cleaning, fingerprint })
}

/// Fitted transforms from lexical features to classifier inputs:
/// winsorize, min-max scale, then optionally encode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub feature_spec: FeatureSpec,
    pub bounds: OutlierBounds,
    pub scaler: Scaler,
    pub autoencoder: Option<AutoencoderModel>,
}

impl Preprocessor {
    /// Fits every stage on `train` and returns the transformed training
    /// matrix alongside.
    pub fn fit(
        spec: &FeatureSpec,
        train: &Matrix,
        mode: FeatureMode,
        ae_cfg: &TrainConfig,
    ) -> Result<(Preprocessor, Matrix)> {
        if train.cols() != spec.dim() {
            return Err(Error::FeatureSpecMismatch { artifact: spec.dim(), data: train.cols() });
        }
        let (bounds, clipped) = bound_outliers(train)?;
        let scaler = fit_scaler(&clipped)?;
        let scaled = apply_scaler(&scaler, &clipped)?;
        let (autoencoder, out) = match mode {
            FeatureMode::Raw => (None, scaled),
            FeatureMode::Latent => {
                let ae = train_autoencoder(&scaled, ae_cfg)?;
                let latent = ae.encode_matrix(&scaled)?;
                (Some(ae), latent)
            }
        };
        Ok((Preprocessor { feature_spec: spec.clone(), bounds, scaler, autoencoder }, out))
    }

    pub fn mode(&self) -> FeatureMode {
        if self.autoencoder.is_some() {
            FeatureMode::Latent
        } else {
            FeatureMode::Raw
        }
    }

    pub fn output_dim(&self) -> usize {
        self.autoencoder.as_ref().map_or(self.feature_spec.dim(), AutoencoderModel::latent_dim)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.feature_spec.dim() {
            return Err(Error::FeatureSpecMismatch { artifact: self.feature_spec.dim(), data: row.len() });
        }
        let mut v = row.to_vec();
        self.bounds.clip_row(&mut v);
        self.scaler.transform_row(&mut v);
        match &self.autoencoder {
            Some(ae) => ae.encode(&v),
            None => Ok(v),
        }
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.feature_spec.dim() {
            return Err(Error::FeatureSpecMismatch { artifact: self.feature_spec.dim(), data: features.cols() });
        }
        let scaled = apply_scaler(&self.scaler, &apply_bounds(&self.bounds, features)?)?;
        match &self.autoencoder {
            Some(ae) => ae.encode_matrix(&scaled),
            None => Ok(scaled),
        }
    }

    pub fn transform_url(&self, url: &str) -> Result<Vec<f64>> {
        self.transform_row(&extract_features(url, &self.feature_spec)?.values)
    }
}
