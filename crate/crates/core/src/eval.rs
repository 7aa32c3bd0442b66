//! Confusion matrices, metrics, the five-way comparison and its reports.
//!
//! Malicious (label 1) is the positive class throughout.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{Classifier, ClassifierKind, ClassifierParams};
use crate::{Label, MALICIOUS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion_matrix(predicted: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch { left: predicted.len(), right: truth.len() });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p == MALICIOUS, t == MALICIOUS) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    /// Detection rate.
    pub recall: f64,
    pub false_positive_rate: f64,
    pub f1: f64,
    /// Metrics whose ratio was 0/0 and were reported as 0.
    pub degenerate: Vec<&'static str>,
}

fn ratio(num: u64, den: u64, name: &'static str, degenerate: &mut Vec<&'static str>) -> f64 {
    if den == 0 {
        degenerate.push(name);
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut degenerate = Vec::new();
    let accuracy = (cm.tp + cm.tn) as f64 / cm.total() as f64;
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut degenerate);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", &mut degenerate);
    let false_positive_rate = ratio(cm.fp, cm.fp + cm.tn, "false_positive_rate", &mut degenerate);
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_, "f1", &mut degenerate);
    Ok(MetricsReport { accuracy, precision, recall, false_positive_rate, f1, degenerate })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub kind: ClassifierKind,
    pub accuracy: f64,
}

impl ComparisonRow {
    pub fn name(&self) -> &'static str {
        self.kind.display_name()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Human-readable description of the train/test split.
    pub split: String,
    pub seed: u64,
}

impl ComparisonTable {
    /// `classifier,accuracy` with full-precision accuracies.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("classifier,accuracy\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{}", r.name(), r.accuracy);
        }
        out
    }

    pub fn accuracy_of(&self, kind: ClassifierKind) -> Option<f64> {
        self.rows.iter().find(|r| r.kind == kind).map(|r| r.accuracy)
    }

    /// Parses the output of [`ComparisonTable::to_csv`].
    pub fn from_csv(text: &str, split: String, seed: u64) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 2 {
                return Err(Error::MalformedRow(line));
            }
            let kind = ClassifierKind::ALL
                .into_iter()
                .find(|k| k.display_name() == &rec[0])
                .ok_or(Error::MalformedRow(line))?;
            let accuracy = rec[1].trim().parse().map_err(|_| Error::MalformedRow(line))?;
            rows.push(ComparisonRow { kind, accuracy });
        }
        Ok(ComparisonTable { rows, split, seed })
    }

    /// Rows sorted by accuracy, best first (stable for equal values).
    pub fn ranking(&self) -> Vec<&ComparisonRow> {
        let mut r: Vec<_> = self.rows.iter().collect();
        r.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy));
        r
    }
}

/// Output of one comparison run.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub table: ComparisonTable,
    pub matrices: Vec<(ClassifierKind, ConfusionMatrix)>,
}

/// Trains all five classifiers on `train` and scores them on `test`, in
/// table order.
pub fn compare_classifiers(
    train: &Dataset,
    test: &Dataset,
    params: &ClassifierParams,
    split: String,
    seed: u64,
) -> Result<Comparison> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClassTrainingSet);
    }
    let mut rows = Vec::new();
    let mut matrices = Vec::new();
    for kind in ClassifierKind::ALL {
        let model = Classifier::train(kind, train, params)?;
        let cm = evaluate_classifier(&model, test)?;
        rows.push(ComparisonRow { kind, accuracy: compute_metrics(&cm)?.accuracy });
        matrices.push((kind, cm));
    }
    Ok(Comparison { table: ComparisonTable { rows, split, seed }, matrices })
}

pub fn evaluate_classifier(model: &Classifier, test: &Dataset) -> Result<ConfusionMatrix> {
    let predicted: Vec<Label> = model.predict_all(&test.features)?.into_iter().map(|p| p.0).collect();
    confusion_matrix(&predicted, &test.labels)
}

const CHART_WIDTH: usize = 640;
const CHART_HEIGHT: usize = 400;
const MARGIN_LEFT: usize = 60;
const MARGIN_RIGHT: usize = 20;
const MARGIN_TOP: usize = 40;
const MARGIN_BOTTOM: usize = 60;

/// SVG 1.1 bar chart: one `<rect class="bar">` per row on a `[0, 1]` axis,
/// each labeled with its value to six decimals.
pub fn render_bar_chart(table: &ComparisonTable) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let plot_w = (CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT) as f64;
    let plot_h = (CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) as f64;
    let base_y = (MARGIN_TOP as f64) + plot_h;
    let slot = plot_w / table.rows.len() as f64;
    let bar_w = slot * 0.6;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" viewBox="0 0 {CHART_WIDTH} {CHART_HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">Classifier accuracy</text>"#,
        CHART_WIDTH as f64 / 2.0
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let y = base_y - v * plot_h;
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            MARGIN_LEFT as f64 + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{v:.1}</text>"#,
            MARGIN_LEFT - 6,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base_y:.2}" stroke="black"/>"#
    );
    for (i, row) in table.rows.iter().enumerate() {
        let h = row.accuracy.clamp(0.0, 1.0) * plot_h;
        let x = MARGIN_LEFT as f64 + slot * i as f64 + (slot - bar_w) / 2.0;
        let cx = x + bar_w / 2.0;
        let _ = writeln!(
            s,
            r##"<rect class="bar" x="{x:.2}" y="{:.2}" width="{bar_w:.2}" height="{h:.2}" fill="#4878a8"/>"##,
            base_y - h
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.6}</text>"#,
            base_y - h - 4.0,
            row.accuracy
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
            base_y + 18.0,
            row.name()
        );
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn write_bar_chart(table: &ComparisonTable, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_bar_chart(table)?)?;
    Ok(())
}

/// Fixed-width 2x2 grid, truth in rows and prediction in columns.
pub fn render_confusion(cm: &ConfusionMatrix, name: &str) -> String {
    let w = [cm.tp, cm.fp, cm.tn, cm.fn_].iter().map(|v| v.to_string().len()).max().unwrap_or(1).max(9);
    let mut s = String::new();
    let _ = writeln!(s, "Confusion matrix: {name}");
    let _ = writeln!(s, "{:<17} {:>w$} {:>w$}", "truth \\ predicted", "benign", "malicious");
    let _ = writeln!(s, "{:<17} {:>w$} {:>w$}", "benign", cm.tn, cm.fp);
    let _ = writeln!(s, "{:<17} {:>w$} {:>w$}", "malicious", cm.fn_, cm.tp);
    s
}

/// Parses the grid produced by [`render_confusion`].
pub fn parse_confusion(text: &str) -> Option<ConfusionMatrix> {
    let cells = |prefix: &str| -> Option<(u64, u64)> {
        let line = text.lines().find(|l| l.starts_with(prefix) && !l.starts_with("truth"))?;
        let mut it = line[prefix.len()..].split_whitespace().map(|v| v.parse::<u64>());
        Some((it.next()?.ok()?, it.next()?.ok()?))
    };
    let (tn, fp) = cells("benign ")?;
    let (fn_, tp) = cells("malicious ")?;
    Some(ConfusionMatrix { tp, fp, tn, fn_ })
}

/// Metric lines, full precision, one `name: value` per line.
pub fn render_metrics(m: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "accuracy: {}", m.accuracy);
    let _ = writeln!(s, "precision: {}", m.precision);
    let _ = writeln!(s, "recall: {}", m.recall);
    let _ = writeln!(s, "false_positive_rate: {}", m.false_positive_rate);
    let _ = writeln!(s, "f1: {}", m.f1);
    if !m.degenerate.is_empty() {
        let _ = writeln!(s, "degenerate (0/0 reported as 0): {}", m.degenerate.join(", "));
    }
    s
}

/// Published reference accuracies the comparison is measured against.
pub const REFERENCE_ACCURACY: [(ClassifierKind, f64); 5] = [
    (ClassifierKind::Mlp, 0.977717),
    (ClassifierKind::Knn, 0.991086),
    (ClassifierKind::Xgb, 0.929417),
    (ClassifierKind::GradientBoosting, 0.960714),
    (ClassifierKind::RandomForest, 0.955222),
];

/// Gradient Boosting reference accuracy before rounding to six decimals.
pub const REFERENCE_GB_FULL: f64 = 0.960714161658967;

/// Full text report: every confusion matrix with its metrics, the measured
/// ranking and the reference table.
pub fn render_comparison_report(cmp: &Comparison) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "Classifier comparison ({}, seed {})", cmp.table.split, cmp.table.seed);
    let _ = writeln!(s);
    for (kind, cm) in &cmp.matrices {
        s.push_str(&render_confusion(cm, kind.display_name()));
        s.push_str(&render_metrics(&compute_metrics(cm)?));
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "Measured ranking:");
    for (i, row) in cmp.table.ranking().iter().enumerate() {
        let _ = writeln!(s, "  {}. {} {:.6}", i + 1, row.name(), row.accuracy);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Reference accuracies (published comparison):");
    for (kind, acc) in REFERENCE_ACCURACY {
        let measured = cmp.table.accuracy_of(kind).map_or("n/a".to_string(), |m| format!("{m:.6}"));
        let _ = writeln!(s, "  {:<18} reference {acc:.6}  measured {measured}", kind.display_name());
    }
    let _ = writeln!(
        s,
        "Note: the reference write-up names Random Forest the best classifier, while its own table ranks K-NN highest."
    );
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_cells() {
        let cm = confusion_matrix(&[1, 0, 1, 1], &[1, 0, 0, 1]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 2, tn: 1, fp: 1, fn_: 0 });
        let all = confusion_matrix(&[1; 5], &[1; 5]).unwrap();
        assert_eq!(all, ConfusionMatrix { tp: 5, ..Default::default() });
    }

    #[test]
    fn input_errors() {
        assert!(matches!(confusion_matrix(&[1, 0, 1], &[1, 0, 0, 1]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion_matrix(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(compute_metrics(&ConfusionMatrix::default()), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn metrics() {
        let m = compute_metrics(&ConfusionMatrix { tp: 2, tn: 1, fp: 1, fn_: 0 }).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.precision, 2.0 / 3.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.false_positive_rate, 0.5);
        assert_eq!(m.f1, 0.8);
        assert!(m.degenerate.is_empty());

        let clean = compute_metrics(&ConfusionMatrix { tn: 100, ..Default::default() }).unwrap();
        assert_eq!(clean.false_positive_rate, 0.0);
        assert_eq!(clean.recall, 0.0);
        assert!(clean.degenerate.contains(&"recall"));
        assert!(!clean.degenerate.contains(&"false_positive_rate"));
    }

    fn table() -> ComparisonTable {
        ComparisonTable {
            rows: ClassifierKind::ALL
                .iter()
                .zip([0.97, 0.99, 0.93, 0.96, 0.955])
                .map(|(&kind, accuracy)| ComparisonRow { kind, accuracy })
                .collect(),
            split: "80/20".into(),
            seed: 42,
        }
    }

    #[test]
    fn chart_has_one_bar_per_row() {
        let svg = render_bar_chart(&table()).unwrap();
        assert_eq!(svg.matches(r#"class="bar""#).count(), 5);
        assert!(svg.contains("0.990000"));
        assert_eq!(svg, render_bar_chart(&table()).unwrap());
        let empty = ComparisonTable { rows: vec![], split: String::new(), seed: 0 };
        assert!(render_bar_chart(&empty).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = table();
        let csv = t.to_csv();
        assert!(csv.starts_with("classifier,accuracy\nMLP,0.97\nK-NN,0.99\n"));
        assert_eq!(ComparisonTable::from_csv(&csv, t.split.clone(), t.seed).unwrap(), t);
        assert_eq!(t.ranking()[0].kind, ClassifierKind::Knn);
    }

    #[test]
    fn confusion_grid() {
        let cm = ConfusionMatrix { tp: 2, tn: 1, fp: 1, fn_: 0 };
        let text = render_confusion(&cm, "KNN");
        assert!(text.starts_with("Confusion matrix: KNN\n"));
        assert_eq!(parse_confusion(&text), Some(cm));
        assert_eq!(text, render_confusion(&cm, "KNN"));

        let only_tn = ConfusionMatrix { tn: 7, ..Default::default() };
        let text = render_confusion(&only_tn, "X");
        assert_eq!(parse_confusion(&text), Some(only_tn));
        let nonzero = text.lines().skip(2).flat_map(|l| l.split_whitespace().filter_map(|v| v.parse::<u64>().ok())).filter(|&v| v != 0).count();
        assert_eq!(nonzero, 1);
    }
}
