use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictLabel {
    Safe,
    Flagged,
}

impl fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictLabel::Safe => "safe",
            VerdictLabel::Flagged => "flagged",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub url: String,
    /// Probability that the URL is malicious.
    pub confidence: f64,
    pub label: VerdictLabel,
}

impl Verdict {
    /// Flagged iff `confidence >= threshold`.
    pub fn classify(url: &str, confidence: f64, threshold: f64) -> Self {
        let label = if confidence >= threshold { VerdictLabel::Flagged } else { VerdictLabel::Safe };
        Verdict { url: url.to_string(), confidence, label }
    }

    /// `url<TAB>confidence (6 decimals)<TAB>safe|flagged`.
    pub fn to_line(&self) -> String {
        format!("{}\t{:.6}\t{}", self.url, self.confidence, self.label)
    }
}

/// Splits scored URLs into safe and flagged lists, both in input order. A
/// URL is flagged when its confidence is at least `threshold`.
pub fn filter_predictions(inputs: &[(String, f64)], threshold: f64) -> Result<(Vec<Verdict>, Vec<Verdict>)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::ThresholdOutOfRange(threshold));
    }
    let (flagged, safe) = inputs
        .iter()
        .map(|(url, confidence)| Verdict::classify(url, *confidence, threshold))
        .partition(|v| v.label == VerdictLabel::Flagged);
    Ok((safe, flagged))
}
