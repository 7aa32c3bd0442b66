//! Versioned, checksummed model files.
//!
//! An artifact is one JSON document:
//!
//! ```text
//! {
//!   "checksum": "<sha256 hex>",
//!   "created_unix": 1700000000,
//!   "format_version": 1,
//!   "payload": { "classifier": ..., "metadata": ..., "preprocessor": ... }
//! }
//! ```
//!
//! The checksum covers `"<format_version>\n<payload as compact JSON>"`, so
//! any edit to the parameters is caught on load. `created_unix` sits
//! outside the checksum; two trainings with the same inputs differ only on
//! that line. Floats are written in shortest round-trip form and read back
//! exactly.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::pipeline::Preprocessor;
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::Label;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub rows: usize,
    /// `[benign, malicious]`.
    pub class_counts: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Payload {
    preprocessor: Preprocessor,
    classifier: Classifier,
    metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    checksum: String,
    created_unix: u64,
    format_version: u32,
    payload: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub preprocessor: Preprocessor,
    pub classifier: Classifier,
    pub metadata: TrainingMetadata,
    pub created_unix: u64,
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
pub fn now_unix() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn checksum(version: u32, payload: &serde_json::Value) -> String {
    let body = serde_json::to_string(payload).expect("JSON values always serialize");
    let mut h = Sha256::new();
    h.update(format!("{version}\n").as_bytes());
    h.update(body.as_bytes());
    hex::encode(h.finalize())
}

impl ModelArtifact {
    pub fn new(preprocessor: Preprocessor, classifier: Classifier, metadata: TrainingMetadata) -> Self {
        ModelArtifact { format_version: FORMAT_VERSION, preprocessor, classifier, metadata, created_unix: now_unix() }
    }

    /// Malicious-class confidence for a raw URL.
    pub fn score_url(&self, url: &str) -> Result<f64> {
        self.classifier.predict(&self.preprocessor.transform_url(url)?).map(|p| p.1)
    }

    pub fn predict_url(&self, url: &str) -> Result<(Label, f64)> {
        self.classifier.predict(&self.preprocessor.transform_url(url)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let payload = Payload {
            preprocessor: self.preprocessor.clone(),
            classifier: self.classifier.clone(),
            metadata: self.metadata.clone(),
        };
        let value = serde_json::to_value(&payload).map_err(|e| Error::CorruptArtifact(e.to_string()))?;
        let env = Envelope {
            checksum: checksum(self.format_version, &value),
            created_unix: self.created_unix,
            format_version: self.format_version,
            payload: value,
        };
        let mut s = serde_json::to_string_pretty(&env).map_err(|e| Error::CorruptArtifact(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptArtifact(format!("not valid JSON: {e}")))?;
        let found = raw
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::CorruptArtifact("missing format_version".into()))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                supported: FORMAT_VERSION,
            });
        }
        let env: Envelope =
            serde_json::from_value(raw).map_err(|e| Error::CorruptArtifact(format!("bad envelope: {e}")))?;
        if checksum(env.format_version, &env.payload) != env.checksum {
            return Err(Error::CorruptArtifact("checksum mismatch".into()));
        }
        let payload: Payload =
            serde_json::from_value(env.payload).map_err(|e| Error::CorruptArtifact(format!("bad payload: {e}")))?;
        Ok(ModelArtifact {
            format_version: env.format_version,
            preprocessor: payload.preprocessor,
            classifier: payload.classifier,
            metadata: payload.metadata,
            created_unix: env.created_unix,
        })
    }
}

pub fn save_model(artifact: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, artifact.to_json()?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        std::io::ErrorKind::InvalidData => Error::CorruptArtifact("not UTF-8".into()),
        _ => Error::Io(e),
    })?;
    ModelArtifact::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::app::config::FeatureMode;
    use crate::features::FeatureSpec;
    use crate::knn::KnnModel;
    use crate::neural::TrainConfig;
    use crate::Matrix;

    fn artifact() -> ModelArtifact {
        let spec = FeatureSpec::default();
        let urls = ["http://a.com/login", "https://example.org/docs", "1.2.3.4/bins/mozi.m"];
        let m = Matrix::from_rows(
            spec.dim(),
            urls.iter().map(|u| crate::features::extract_features(u, &spec).unwrap().values),
        )
        .unwrap();
        let (pre, x) = Preprocessor::fit(&spec, &m, FeatureMode::Raw, &TrainConfig::autoencoder_default()).unwrap();
        let knn = KnnModel::new(x, vec![1, 0, 1], 1).unwrap();
        let meta = TrainingMetadata { seed: 1, dataset_fingerprint: "abc".into(), rows: 3, class_counts: [1, 2] };
        ModelArtifact::new(pre, Classifier::Knn(knn), meta)
    }

    #[test]
    fn json_round_trip() {
        let a = artifact();
        let back = ModelArtifact::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn tampering_is_detected() {
        let text = artifact().to_json().unwrap();
        let tampered = text.replacen("\"rows\": 3", "\"rows\": 4", 1);
        assert_ne!(tampered, text);
        assert!(matches!(ModelArtifact::from_json(&tampered), Err(Error::CorruptArtifact(_))));
        assert!(matches!(ModelArtifact::from_json("{not json"), Err(Error::CorruptArtifact(_))));
    }

    #[test]
    fn future_version_is_rejected() {
        let text = artifact().to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            ModelArtifact::from_json(&text),
            Err(Error::UnsupportedVersion { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn timestamp_is_outside_checksum() {
        let text = artifact().to_json().unwrap();
        let line = text.lines().find(|l| l.contains("created_unix")).unwrap();
        let retimed = text.replacen(line, "  \"created_unix\": 5,", 1);
        assert_eq!(ModelArtifact::from_json(&retimed).unwrap().created_unix, 5);
    }
}
