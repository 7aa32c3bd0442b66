//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the code under test except to
//! build inputs.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use urlsentry::neural::{Activation, Loss, Network};
use urlsentry::{Dataset, Matrix};

pub fn sample_csv() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample_urls.csv")
}

const HOST_WORDS: [&str; 10] = ["paypal", "example", "bank", "secure", "news", "shop", "mail", "login", "cdn", "free"];
const TLDS: [&str; 6] = ["com", "org", "net", "xyz", "ru", "co.uk"];
const PATH_WORDS: [&str; 8] = ["index.php", "account", "verify", "img", "Login", "bins", "a-b", "docs"];

/// A random, mostly well-formed URL. Some are IPs, some lack a scheme, some
/// carry a query string.
pub fn random_url<R: Rng>(rng: &mut R) -> String {
    let mut s = String::new();
    match rng.gen_range(0..4) {
        0 => s.push_str("http://"),
        1 => s.push_str("https://"),
        2 => s.push_str("HTTP://"),
        _ => {}
    }
    if rng.gen_bool(0.15) {
        let o: Vec<String> = (0..4).map(|_| rng.gen_range(0..256).to_string()).collect();
        s.push_str(&o.join("."));
    } else {
        for _ in 0..rng.gen_range(0..3) {
            s.push_str(HOST_WORDS.choose(rng).unwrap());
            s.push('.');
        }
        s.push_str(HOST_WORDS.choose(rng).unwrap());
        if rng.gen_bool(0.3) {
            s.push('-');
            s.push_str(&rng.gen_range(0..999).to_string());
        }
        s.push('.');
        s.push_str(TLDS.choose(rng).unwrap());
    }
    for _ in 0..rng.gen_range(0..4) {
        s.push('/');
        s.push_str(PATH_WORDS.choose(rng).unwrap());
    }
    if rng.gen_bool(0.3) {
        s.push_str(&format!("?id={}&u=@x%20y", rng.gen_range(0..10_000)));
    }
    s
}

/// Random matrix with values on a coarse grid so exact ties
/// between rows and distances actually happen.
pub fn grid_matrix<R: Rng>(rng: &mut R, n: usize, d: usize, levels: i32) -> Matrix {
    let data = (0..n * d).map(|_| f64::from(rng.gen_range(0..levels)) / 2.0).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

pub fn random_labels<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect()
}

pub fn dataset(features: Matrix, labels: Vec<u8>) -> Dataset {
    let urls = (0..labels.len()).map(|i| format!("row{i}")).collect();
    Dataset::new(features, labels, urls).unwrap()
}

/// All-pairs KNN: sort every stored row by (squared distance, index) and
/// vote over the first k.
pub fn brute_knn(stored: &Matrix, labels: &[u8], x: &[f64], k: usize) -> (u8, f64, Vec<usize>) {
    let mut all: Vec<(f64, usize)> = (0..stored.rows())
        .map(|i| (stored.row(i).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let idx: Vec<usize> = all[..k].iter().map(|p| p.1).collect();
    let votes = idx.iter().filter(|&&i| labels[i] == 1).count();
    let label = u8::from(2 * votes >= k);
    (label, votes as f64 / k as f64, idx)
}

/// `1 - p0^2 - p1^2`, evaluated left to right. Gains are compared for
/// exact ties, so the operation order has to be fixed.
fn gini_counts(neg: usize, pos: usize) -> f64 {
    let n = (neg + pos) as f64;
    let (a, b) = (neg as f64 / n, pos as f64 / n);
    1.0 - a * a - b * b
}

/// Exhaustive (feature, midpoint) enumeration of the Gini split.
///
/// Candidates are visited feature by feature in ascending threshold order,
/// and only a strictly better gain replaces the incumbent. Each gain is
/// evaluated by counting labels on both sides from scratch.
pub fn exhaustive_split(
    m: &Matrix,
    rows: &[usize],
    labels: &[u8],
    min_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let pos_total = rows.iter().filter(|&&r| labels[r] == 1).count();
    let parent = gini_counts(n - pos_total, pos_total);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..m.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| m.get(r, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut t = (lo + hi) / 2.0;
            if t <= lo {
                t = hi;
            }
            let (mut ln, mut lp, mut rn, mut rp) = (0, 0, 0, 0);
            for &r in rows {
                let left = m.get(r, f) < t;
                match (left, labels[r] == 1) {
                    (true, false) => ln += 1,
                    (true, true) => lp += 1,
                    (false, false) => rn += 1,
                    (false, true) => rp += 1,
                }
            }
            let (nl, nr) = (ln + lp, rn + rp);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let gain = parent
                - (nl as f64 / n as f64) * gini_counts(ln, lp)
                - (nr as f64 / n as f64) * gini_counts(rn, rp);
            if gain > 1e-12 && best.is_none_or(|b| gain > b.2) {
                best = Some((f, t, gain));
            }
        }
    }
    best
}

/// Twenty 2-d points split by the line x + y = 1 with a 0.2 margin.
pub fn separable_toy() -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..10 {
        let t = f64::from(i) / 9.0;
        rows.push(vec![0.05 + 0.3 * t, 0.35 - 0.3 * t]);
        labels.push(0);
        rows.push(vec![0.65 + 0.3 * t, 0.95 - 0.3 * t]);
        labels.push(1);
    }
    dataset(Matrix::from_rows(2, rows).unwrap(), labels)
}

/// Some (w, b) with y = [w.x + b > 0] on every row, found by the perceptron
/// rule. Perceptron convergence on a finite run is a certificate of linear
/// separability.
pub fn perceptron_certificate(ds: &Dataset, max_epochs: usize) -> Option<(Vec<f64>, f64)> {
    let d = ds.dim();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    for _ in 0..max_epochs {
        let mut mistakes = 0;
        for (x, &y) in ds.features.iter_rows().zip(&ds.labels) {
            let s: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b;
            let sign = if y == 1 { 1.0 } else { -1.0 };
            if sign * s <= 0.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += sign * xj;
                }
                b += sign;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            return Some((w, b));
        }
    }
    None
}

pub const STEP: f64 = 1e-5;

/// Relative error with a floor so that near-zero gradients are compared
/// absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

/// Worst relative error between analytic and central-difference gradients.
pub fn worst_gradient_error(net: &Network, x: &Matrix, y: &Matrix, loss: Loss) -> f64 {
    let analytic = net.gradients(x, y, loss).unwrap().flatten();
    let params = net.flat_params();
    assert_eq!(analytic.len(), params.len());
    let mut worst = 0.0f64;
    for (i, &p) in params.iter().enumerate() {
        let mut plus = net.clone();
        plus.set_param(i, p + STEP);
        let mut minus = net.clone();
        minus.set_param(i, p - STEP);
        let numeric = (plus.loss(x, y, loss).unwrap() - minus.loss(x, y, loss).unwrap()) / (2.0 * STEP);
        worst = worst.max(rel_err(analytic[i], numeric));
    }
    worst
}

/// Fresh zero biases put dead-relu rows exactly on the kink at 0, where the
/// loss is not differentiable.
pub fn randomize_biases(net: &mut Network, rng: &mut ChaCha8Rng) {
    let mut offset = 0;
    for layer in net.layers.clone() {
        offset += layer.weights.as_slice().len();
        for j in 0..layer.biases.len() {
            net.set_param(offset + j, rng.gen_range(-0.5..0.5));
        }
        offset += layer.biases.len();
    }
}

pub fn near_relu_kink(net: &Network, x: &Matrix) -> bool {
    x.iter_rows().any(|r| {
        let cache = net.forward(r).unwrap();
        net.layers
            .iter()
            .zip(&cache.pre_activations)
            .any(|(l, z)| l.activation == Activation::Relu && z.iter().any(|v| v.abs() < 1e-3))
    })
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}
