//! Synthetic inputs for the criterion benchmarks.

use urlsentry::features::{extract_features, FeatureSpec};
use urlsentry::{Dataset, Label, Matrix};

/// Deterministic mix of benign-looking and malicious-looking URLs.
pub fn synthetic_urls(n: usize) -> Vec<(String, Label)> {
    (0..n)
        .map(|i| {
            let mal = i % 3 == 0;
            let url = if mal {
                format!("http://{}.{}.{}.{}/login/verify?id={i}&acct=secure", 10 + i % 200, i % 7, i % 251, 1 + i % 9)
            } else {
                format!("https://www.site{}.com/docs/page-{}", i % 997, i % 13)
            };
            (url, Label::from(mal))
        })
        .collect()
}

pub fn synthetic_dataset(n: usize) -> Dataset {
    let spec = FeatureSpec::default();
    let pairs = synthetic_urls(n);
    let rows: Vec<Vec<f64>> = pairs.iter().map(|(u, _)| extract_features(u, &spec).expect("non-empty").values).collect();
    Dataset::new(
        Matrix::from_rows(spec.dim(), rows).expect("consistent widths"),
        pairs.iter().map(|p| p.1).collect(),
        pairs.into_iter().map(|p| p.0).collect(),
    )
    .expect("aligned")
}
