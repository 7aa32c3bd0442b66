//! Labeled-URL ingestion and preprocessing.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureSpec};
use crate::{Label, Matrix};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RawRecord {
    pub url: String,
    pub label_text: String,
}

impl RawRecord {
    pub fn new(url: impl Into<String>, label_text: impl Into<String>) -> Self {
        RawRecord { url: url.into(), label_text: label_text.into() }
    }
}

/// Reads a `url,type` CSV (RFC 4180 quoting, header row required).
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_csv(file)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let url_col = column("url")?;
    let type_col = column("type")?;
    let width = headers.len();

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() != width {
            let line = row.position().map_or(0, |p| p.line());
            return Err(Error::MalformedRow(line));
        }
        out.push(RawRecord::new(&row[url_col], &row[type_col]));
    }
    Ok(out)
}

/// Label text to class lookup. Matching ignores case and surrounding
/// whitespace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMapping(BTreeMap<String, Label>);

impl Default for LabelMapping {
    fn default() -> Self {
        let mut m = BTreeMap::new();
        m.insert("benign".to_string(), crate::BENIGN);
        for attack in ["phishing", "defacement", "malware"] {
            m.insert(attack.to_string(), crate::MALICIOUS);
        }
        LabelMapping(m)
    }
}

impl LabelMapping {
    pub fn empty() -> Self {
        LabelMapping(BTreeMap::new())
    }

    pub fn insert(&mut self, text: &str, label: Label) {
        self.0.insert(text.trim().to_lowercase(), label);
    }

    pub fn get(&self, text: &str) -> Option<Label> {
        self.0.get(&text.trim().to_lowercase()).copied()
    }
}

/// URLs paired with binary labels, before featurization.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledUrls {
    pub urls: Vec<String>,
    pub labels: Vec<Label>,
}

pub fn map_labels(records: &[RawRecord], mapping: &LabelMapping) -> Result<LabeledUrls> {
    let mut out = LabeledUrls::default();
    for r in records {
        let label = mapping.get(&r.label_text).ok_or_else(|| Error::UnknownLabel(r.label_text.clone()))?;
        out.urls.push(r.url.clone());
        out.labels.push(label);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CleanReport {
    pub empty_dropped: usize,
    pub duplicates_dropped: usize,
}

impl CleanReport {
    pub fn total_dropped(&self) -> usize {
        self.empty_dropped + self.duplicates_dropped
    }
}

/// Drops rows with an empty url or label, then exact duplicate
/// `(url, label)` pairs, keeping the first occurrence.
pub fn clean(records: Vec<RawRecord>) -> (Vec<RawRecord>, CleanReport) {
    let mut report = CleanReport::default();
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(records.len());
    for mut r in records {
        r.url = r.url.trim().to_string();
        r.label_text = r.label_text.trim().to_string();
        if r.url.is_empty() || r.label_text.is_empty() {
            report.empty_dropped += 1;
        } else if !seen.insert((r.url.clone(), r.label_text.clone())) {
            report.duplicates_dropped += 1;
        } else {
            kept.push(r);
        }
    }
    (kept, report)
}

/// Feature matrix with aligned labels and source URLs.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<Label>,
    pub urls: Vec<String>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<Label>, urls: Vec<String>) -> Result<Self> {
        let n = features.rows();
        for len in [labels.len(), urls.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, actual: len });
            }
        }
        Ok(Dataset { features, labels, urls })
    }

    /// Featurizes every URL under `spec`.
    pub fn from_labeled(data: &LabeledUrls, spec: &FeatureSpec) -> Result<Self> {
        let rows = data
            .urls
            .iter()
            .map(|u| extract_features(u, spec).map(|v| v.values))
            .collect::<Result<Vec<_>>>()?;
        let features = Matrix::from_rows(spec.dim(), rows)?;
        Dataset::new(features, data.labels.clone(), data.urls.clone())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// `[benign, malicious]` row counts.
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == crate::MALICIOUS).count();
        [self.labels.len() - pos, pos]
    }

    pub fn has_both_classes(&self) -> bool {
        let [neg, pos] = self.class_counts();
        neg > 0 && pos > 0
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            urls: idx.iter().map(|&i| self.urls[i].clone()).collect(),
        }
    }

    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        Dataset::new(features, self.labels.clone(), self.urls.clone())
    }
}

/// Per-column min-max scaling parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(train: &Matrix) -> Result<Scaler> {
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut min = train.row(0).to_vec();
    let mut max = min.clone();
    for row in train.iter_rows().skip(1) {
        for (j, &x) in row.iter().enumerate() {
            min[j] = min[j].min(x);
            max[j] = max[j].max(x);
        }
    }
    Ok(Scaler { min, max })
}

impl Scaler {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Out-of-range values are not clamped. Constant columns map to 0.
    pub fn transform_row(&self, row: &mut [f64]) {
        for ((x, &lo), &hi) in row.iter_mut().zip(&self.min).zip(&self.max) {
            let span = hi - lo;
            *x = if span > 0.0 { (*x - lo) / span } else { 0.0 };
        }
    }
}

pub fn apply_scaler(scaler: &Scaler, features: &Matrix) -> Result<Matrix> {
    check_width(scaler.dim(), features)?;
    let mut out = features.clone();
    for i in 0..out.rows() {
        scaler.transform_row(out.row_mut(i));
    }
    Ok(out)
}

/// Per-column winsorizing limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub const LOWER_PERCENTILE: usize = 1;
pub const UPPER_PERCENTILE: usize = 99;

/// Nearest-rank percentile of an ascending slice: the value at 1-based rank
/// `ceil(p * n / 100)`, with rank at least 1.
pub fn nearest_rank(sorted: &[f64], percent: usize) -> f64 {
    let n = sorted.len();
    let rank = (percent * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

/// Fits 1st/99th percentile bounds per column and returns them along with the
/// clipped training matrix.
pub fn bound_outliers(train: &Matrix) -> Result<(OutlierBounds, Matrix)> {
    if train.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut lower = Vec::with_capacity(train.cols());
    let mut upper = Vec::with_capacity(train.cols());
    for j in 0..train.cols() {
        let mut col = train.column(j);
        col.sort_by(f64::total_cmp);
        lower.push(nearest_rank(&col, LOWER_PERCENTILE));
        upper.push(nearest_rank(&col, UPPER_PERCENTILE));
    }
    let bounds = OutlierBounds { lower, upper };
    let clipped = apply_bounds(&bounds, train)?;
    Ok((bounds, clipped))
}

impl OutlierBounds {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clip_row(&self, row: &mut [f64]) {
        for ((x, &lo), &hi) in row.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(lo, hi);
        }
    }
}

pub fn apply_bounds(bounds: &OutlierBounds, features: &Matrix) -> Result<Matrix> {
    check_width(bounds.dim(), features)?;
    let mut out = features.clone();
    for i in 0..out.rows() {
        bounds.clip_row(out.row_mut(i));
    }
    Ok(out)
}

fn check_width(expected: usize, m: &Matrix) -> Result<()> {
    if m.cols() != expected {
        return Err(Error::DimensionMismatch { expected, actual: m.cols() });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { test_fraction: 0.2, seed: 42, stratified: true }
    }
}

/// Row indices of a train/test partition, each ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Picks test rows per class (or overall, when not stratified): the group is
/// shuffled with a generator seeded from `cfg.seed` and the first
/// `round(group_size * test_fraction)` rows go to test.
pub fn split_indices(labels: &[Label], cfg: &SplitConfig) -> Result<SplitIndices> {
    if !(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!("test_fraction {} not in (0, 1)", cfg.test_fraction)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let groups: Vec<Vec<usize>> = if cfg.stratified {
        let (pos, neg): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| labels[i] == crate::MALICIOUS);
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::DegenerateSplit("stratified split needs both classes".into()));
        }
        vec![neg, pos]
    } else {
        vec![(0..labels.len()).collect()]
    };

    let mut in_test = vec![false; labels.len()];
    for mut group in groups {
        let take = (group.len() as f64 * cfg.test_fraction).round() as usize;
        group.shuffle(&mut rng);
        for &i in &group[..take] {
            in_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| in_test[i]);
    if train.is_empty() || test.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "{} train / {} test rows",
            train.len(),
            test.len()
        )));
    }
    Ok(SplitIndices { train, test })
}

pub fn stratified_split(ds: &Dataset, cfg: &SplitConfig) -> Result<(Dataset, Dataset)> {
    let idx = split_indices(&ds.labels, cfg)?;
    Ok((ds.subset(&idx.train), ds.subset(&idx.test)))
}

/// Keeps at most `max_rows` rows, preserving class proportions. Returns the
/// data unchanged when it is already small enough.
pub fn stratified_subsample(ds: &Dataset, max_rows: usize, seed: u64) -> Result<Dataset> {
    if ds.len() <= max_rows {
        return Ok(ds.clone());
    }
    let cfg = SplitConfig {
        test_fraction: max_rows as f64 / ds.len() as f64,
        seed,
        stratified: ds.has_both_classes(),
    };
    let idx = split_indices(&ds.labels, &cfg)?;
    Ok(ds.subset(&idx.test))
}
