//! URL splitting and lexical feature extraction.
//!
//! Features are computed from the URL string alone. Nothing is decoded or
//! fetched, so malformed percent-escapes and other odd input are simply
//! counted as literal characters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A URL split into the segments the feature extractor looks at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UrlParts {
    /// Lowercased; empty when the input has no `://`.
    pub scheme: String,
    /// Lowercased authority (everything up to the first `/` or `?`).
    pub host: String,
    /// Starts with `/` when non-empty. Case preserved.
    pub path: String,
    /// Text after the first `?` following the host, without the `?`.
    pub query: String,
    pub host_is_ip: bool,
}

impl UrlParts {
    /// `scheme://host path ? query`, omitting empty segments.
    pub fn reassemble(&self) -> String {
        let mut out = String::new();
        if !self.scheme.is_empty() {
            out.push_str(&self.scheme);
            out.push_str("://");
        }
        out.push_str(&self.host);
        out.push_str(&self.path);
        if !self.query.is_empty() {
            out.push('?');
            out.push_str(&self.query);
        }
        out
    }
}

pub fn parse_url(raw: &str) -> Result<UrlParts> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(Error::EmptyUrl);
    }
    let (scheme, rest) = match s.find("://") {
        Some(i) => (s[..i].to_ascii_lowercase(), &s[i + 3..]),
        None => (String::new(), s),
    };
    let host_end = rest.find(['/', '?']).unwrap_or(rest.len());
    let host = rest[..host_end].to_ascii_lowercase();
    let tail = &rest[host_end..];
    let (path, query) = match tail.find('?') {
        Some(q) => (&tail[..q], &tail[q + 1..]),
        None => (tail, ""),
    };
    let host_is_ip = is_dotted_quad(&host);
    Ok(UrlParts {
        scheme,
        host,
        path: path.to_string(),
        query: query.to_string(),
        host_is_ip,
    })
}

/// Four decimal octets in 0..=255 separated by dots, nothing else.
fn is_dotted_quad(host: &str) -> bool {
    let mut octets = 0;
    for part in host.split('.') {
        octets += 1;
        if octets > 4
            || part.is_empty()
            || part.len() > 3
            || !part.bytes().all(|b| b.is_ascii_digit())
            || part.parse::<u16>().map_or(true, |v| v > 255)
        {
            return false;
        }
    }
    octets == 4
}

/// Names of the fixed (non-keyword) features, in column order.
pub const BASE_FEATURES: [&str; 12] = [
    "url_length",
    "host_length",
    "path_length",
    "count_dots",
    "count_hyphens",
    "count_digits",
    "count_special",
    "digit_ratio",
    "path_depth",
    "num_subdomains",
    "has_https",
    "host_is_ip",
];

pub const DEFAULT_KEYWORDS: [&str; 6] = ["login", "secure", "account", "verify", "bank", "free"];

const SPECIAL_CHARS: [char; 7] = ['@', '?', '=', '&', '%', '_', '~'];

/// Column layout of a feature vector: the base features followed by one
/// `kw_<word>` flag per keyword.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    feature_names: Vec<String>,
    keywords: Vec<String>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec::with_keywords(DEFAULT_KEYWORDS).expect("default keyword list is valid")
    }
}

impl FeatureSpec {
    /// Keywords are lowercased. Empty or duplicate keywords are rejected.
    pub fn with_keywords<I, S>(keywords: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut spec = FeatureSpec {
            feature_names: BASE_FEATURES.iter().map(|s| s.to_string()).collect(),
            keywords: Vec::new(),
        };
        for kw in keywords {
            spec = spec.push_keyword(kw.as_ref())?;
        }
        Ok(spec)
    }

    /// Default catalog plus `extra` keywords appended after the defaults.
    pub fn default_with_extra<I, S>(extra: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut spec = FeatureSpec::default();
        for kw in extra {
            spec = spec.push_keyword(kw.as_ref())?;
        }
        Ok(spec)
    }

    fn push_keyword(mut self, kw: &str) -> Result<Self> {
        let kw = kw.trim().to_lowercase();
        if kw.is_empty() {
            return Err(Error::InvalidFeatureSpec("empty keyword".into()));
        }
        let name = format!("kw_{kw}");
        if self.feature_names.contains(&name) {
            return Err(Error::InvalidFeatureSpec(format!("duplicate keyword `{kw}`")));
        }
        self.feature_names.push(name);
        self.keywords.push(kw);
        Ok(self)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

pub fn feature_names(spec: &FeatureSpec) -> Vec<String> {
    spec.feature_names.clone()
}

/// Lexical features of one URL, in [`FeatureSpec`] column order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub fn extract_features(raw: &str, spec: &FeatureSpec) -> Result<FeatureVector> {
    let parts = parse_url(raw)?;
    let url = raw.trim();

    let mut length = 0usize;
    let (mut dots, mut hyphens, mut digits, mut special) = (0usize, 0usize, 0usize, 0usize);
    for c in url.chars() {
        length += 1;
        match c {
            '.' => dots += 1,
            '-' => hyphens += 1,
            c if c.is_ascii_digit() => digits += 1,
            c if SPECIAL_CHARS.contains(&c) => special += 1,
            _ => {}
        }
    }
    let host_dots = parts.host.matches('.').count();

    let mut values = Vec::with_capacity(spec.dim());
    values.extend_from_slice(&[
        length as f64,
        parts.host.chars().count() as f64,
        parts.path.chars().count() as f64,
        dots as f64,
        hyphens as f64,
        digits as f64,
        special as f64,
        digits as f64 / length as f64,
        parts.path.matches('/').count() as f64,
        host_dots.saturating_sub(1) as f64,
        flag(parts.scheme == "https"),
        flag(parts.host_is_ip),
    ]);

    let lowered = url.to_lowercase();
    values.extend(spec.keywords.iter().map(|kw| flag(lowered.contains(kw.as_str()))));
    Ok(FeatureVector { values })
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
