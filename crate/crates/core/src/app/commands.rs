//! The work behind each CLI subcommand. Every command returns its printable
//! summary instead of writing to stdout, so tests can drive them directly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::artifact::{load_model, save_model, ModelArtifact, TrainingMetadata};
use super::config::{ClassifierChoice, PipelineConfig};
use super::filter::{filter_predictions, Verdict};
use super::pipeline::{load_dataset, Preprocessor};
use crate::data::{split_indices, stratified_subsample};
use crate::error::{Error, Result};
use crate::eval::{
    compare_classifiers, compute_metrics, evaluate_classifier, render_bar_chart, render_comparison_report,
    render_confusion, render_metrics, ComparisonTable, ConfusionMatrix, MetricsReport,
};
use crate::models::{Classifier, ClassifierKind};

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const CHART_SVG: &str = "accuracy.svg";
pub const REPORT_TXT: &str = "report.txt";
pub const SAFE_LIST: &str = "safe_urls.txt";

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|source| StageError { stage: name, source })
}

/// A pipeline failure tagged with the stage it happened in.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

impl From<StageError> for Error {
    fn from(e: StageError) -> Self {
        e.source
    }
}

pub type CmdResult<T> = std::result::Result<T, StageError>;

#[derive(Debug)]
pub struct TrainOutcome {
    pub artifact: ModelArtifact,
    pub path: PathBuf,
    pub summary: String,
}

/// Featurizes every cleaned row, fits the preprocessing chain and one
/// classifier, and writes the artifact to `model_path`.
pub fn cmd_train(cfg: &PipelineConfig, data: &Path, model_path: &Path) -> CmdResult<TrainOutcome> {
    let kind = match cfg.classifier {
        None => ClassifierKind::Mlp,
        Some(ClassifierChoice::One(k)) => k,
        Some(ClassifierChoice::All) => {
            return Err(StageError {
                stage: "config",
                source: Error::InvalidConfig("train needs a single classifier, not `all`".into()),
            })
        }
    };
    let spec = stage("config", cfg.feature_spec())?;
    let loaded = stage("load", load_dataset(data, &spec, cfg))?;
    let ds = &loaded.dataset;
    let (pre, x) = stage("preprocess", Preprocessor::fit(&spec, &ds.features, cfg.features, &cfg.autoencoder_config()))?;
    let train = stage("preprocess", ds.with_features(x))?;
    let classifier = stage("train", Classifier::train(kind, &train, &cfg.classifier_params()))?;
    let training_cm = stage("train", evaluate_classifier(&classifier, &train))?;
    let training_acc = stage("train", compute_metrics(&training_cm))?.accuracy;

    let metadata = TrainingMetadata {
        seed: cfg.seed,
        dataset_fingerprint: loaded.fingerprint.clone(),
        rows: ds.len(),
        class_counts: ds.class_counts(),
    };
    let artifact = ModelArtifact::new(pre, classifier, metadata);
    stage("save", save_model(&artifact, model_path))?;

    let [neg, pos] = ds.class_counts();
    let mut summary = String::new();
    let _ = writeln!(summary, "classifier: {}", kind.display_name());
    let _ = writeln!(summary, "features: {:?}, {} inputs", cfg.features, artifact.preprocessor.output_dim());
    let _ = writeln!(
        summary,
        "rows used: {} (read {}, dropped {} empty, {} duplicate)",
        ds.len(),
        loaded.raw_rows,
        loaded.cleaning.empty_dropped,
        loaded.cleaning.duplicates_dropped
    );
    let _ = writeln!(summary, "class balance: {neg} benign / {pos} malicious");
    let _ = writeln!(summary, "seed: {}", cfg.seed);
    let _ = writeln!(summary, "training accuracy: {training_acc:.6}");
    let _ = writeln!(summary, "artifact: {}", model_path.display());
    Ok(TrainOutcome { artifact, path: model_path.to_path_buf(), summary })
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub table: ComparisonTable,
    pub matrices: Vec<(ClassifierKind, ConfusionMatrix)>,
    pub csv_path: PathBuf,
    pub chart_path: PathBuf,
    pub report_path: PathBuf,
    pub summary: String,
}

/// Subsamples to `max_rows`, splits, fits preprocessing on the training
/// part, trains all five classifiers and writes the CSV, chart and report
/// into `out_dir`.
pub fn cmd_compare(cfg: &PipelineConfig, data: &Path, out_dir: &Path) -> CmdResult<CompareOutcome> {
    let spec = stage("config", cfg.feature_spec())?;
    let loaded = stage("load", load_dataset(data, &spec, cfg))?;
    let ds = stage("split", stratified_subsample(&loaded.dataset, cfg.max_rows, cfg.seed))?;
    let split_cfg = cfg.split_config();
    let idx = stage("split", split_indices(&ds.labels, &split_cfg))?;
    let (train_raw, test_raw) = (ds.subset(&idx.train), ds.subset(&idx.test));

    let (pre, x_train) =
        stage("preprocess", Preprocessor::fit(&spec, &train_raw.features, cfg.features, &cfg.autoencoder_config()))?;
    let x_test = stage("preprocess", pre.transform(&test_raw.features))?;
    let train = stage("preprocess", train_raw.with_features(x_train))?;
    let test = stage("preprocess", test_raw.with_features(x_test))?;

    let split = format!(
        "{}/{} {}split of {} rows, {:?} features",
        train.len(),
        test.len(),
        if split_cfg.stratified { "stratified " } else { "" },
        ds.len(),
        cfg.features
    );
    let cmp = stage("train", compare_classifiers(&train, &test, &cfg.classifier_params(), split, cfg.seed))?;

    stage("write", std::fs::create_dir_all(out_dir).map_err(Error::from))?;
    let csv_path = out_dir.join(COMPARISON_CSV);
    let chart_path = out_dir.join(CHART_SVG);
    let report_path = out_dir.join(REPORT_TXT);
    let report = stage("report", render_comparison_report(&cmp))?;
    let svg = stage("report", render_bar_chart(&cmp.table))?;
    stage("write", std::fs::write(&csv_path, cmp.table.to_csv()).map_err(Error::from))?;
    stage("write", std::fs::write(&chart_path, svg).map_err(Error::from))?;
    stage("write", std::fs::write(&report_path, &report).map_err(Error::from))?;

    let mut summary = String::new();
    let _ = writeln!(summary, "{}", cmp.table.split);
    for row in &cmp.table.rows {
        let _ = writeln!(summary, "{:<18} {:.6}", row.name(), row.accuracy);
    }
    let _ = writeln!(summary, "wrote {}, {}, {}", csv_path.display(), chart_path.display(), report_path.display());
    Ok(CompareOutcome {
        table: cmp.table,
        matrices: cmp.matrices,
        csv_path,
        chart_path,
        report_path,
        summary,
    })
}

#[derive(Debug)]
pub struct PredictOutcome {
    /// One verdict per valid URL, in input order.
    pub verdicts: Vec<Verdict>,
    pub safe: Vec<Verdict>,
    pub flagged: Vec<Verdict>,
    /// Per-URL problems that were skipped.
    pub warnings: Vec<String>,
    pub safe_list_path: Option<PathBuf>,
}

impl PredictOutcome {
    pub fn verdict_lines(&self) -> String {
        self.verdicts.iter().map(|v| v.to_line() + "\n").collect()
    }
}

/// Scores every URL against a saved artifact. A URL that cannot be
/// featurized is reported in `warnings` and skipped; the run fails only if
/// nothing could be scored.
pub fn cmd_predict(model: &Path, urls: &[String], threshold: f64, safe_list: Option<&Path>) -> CmdResult<PredictOutcome> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(StageError { stage: "config", source: Error::ThresholdOutOfRange(threshold) });
    }
    if urls.is_empty() {
        return Err(StageError { stage: "input", source: Error::NoUrls });
    }
    let artifact = stage("load", load_model(model))?;
    let scored: Vec<(usize, Result<f64>)> =
        urls.par_iter().enumerate().map(|(i, u)| (i, artifact.score_url(u))).collect();

    let mut ok = Vec::new();
    let mut warnings = Vec::new();
    for (i, r) in scored {
        match r {
            Ok(c) => ok.push((urls[i].trim().to_string(), c)),
            Err(e) => warnings.push(format!("input {}: {e}", i + 1)),
        }
    }
    if ok.is_empty() {
        return Err(StageError { stage: "input", source: Error::NoUrls });
    }
    let (safe, flagged) = stage("filter", filter_predictions(&ok, threshold))?;
    let verdicts: Vec<Verdict> = ok.iter().map(|(url, c)| Verdict::classify(url, *c, threshold)).collect();

    if let Some(path) = safe_list {
        let body: String = safe.iter().map(|v| v.url.clone() + "\n").collect();
        stage("write", std::fs::write(path, body).map_err(Error::from))?;
    }
    Ok(PredictOutcome { verdicts, safe, flagged, warnings, safe_list_path: safe_list.map(Path::to_path_buf) })
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub matrix: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub text: String,
}

/// Scores a labeled CSV with a saved artifact. The CSV is featurized with
/// the configured feature catalog, which must match the artifact's.
pub fn cmd_evaluate(cfg: &PipelineConfig, model: &Path, data: &Path) -> CmdResult<EvaluateOutcome> {
    let artifact = stage("load", load_model(model))?;
    let spec = stage("config", cfg.feature_spec())?;
    if spec != artifact.preprocessor.feature_spec {
        return Err(StageError {
            stage: "features",
            source: Error::FeatureSpecMismatch { artifact: artifact.preprocessor.feature_spec.dim(), data: spec.dim() },
        });
    }
    let loaded = stage("load", load_dataset(data, &spec, cfg))?;
    let x = stage("preprocess", artifact.preprocessor.transform(&loaded.dataset.features))?;
    let ds = stage("preprocess", loaded.dataset.with_features(x))?;
    let matrix = stage("evaluate", evaluate_classifier(&artifact.classifier, &ds))?;
    let metrics = stage("evaluate", compute_metrics(&matrix))?;
    let mut text = render_confusion(&matrix, artifact.classifier.kind().display_name());
    text.push_str(&render_metrics(&metrics));
    Ok(EvaluateOutcome { matrix, metrics, text })
}

/// Re-renders the chart for an existing comparison CSV into `out_dir`.
pub fn cmd_report(comparison_csv: &Path, out_dir: &Path) -> CmdResult<PathBuf> {
    let text = stage(
        "load",
        std::fs::read_to_string(comparison_csv).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(comparison_csv.to_path_buf()),
            _ => Error::Io(e),
        }),
    )?;
    let table = stage("load", ComparisonTable::from_csv(&text, String::new(), 0))?;
    stage("write", std::fs::create_dir_all(out_dir).map_err(Error::from))?;
    let path = out_dir.join(CHART_SVG);
    let svg = stage("report", render_bar_chart(&table))?;
    stage("write", std::fs::write(&path, svg).map_err(Error::from))?;
    Ok(path)
}
