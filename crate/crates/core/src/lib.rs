//! Lexical malicious-URL detection.
//!
//! The pipeline runs URL strings through [`features`] (fixed-order lexical
//! vectors), [`data`] (ingestion, cleaning, winsorizing, min-max scaling,
//! stratified splitting), an optional autoencoder from [`neural`], and one of
//! five classifiers ([`neural`] MLP, [`knn`], and the tree ensembles in
//! [`trees`]). [`eval`] produces confusion matrices and the head-to-head
//! comparison; [`app`] holds configuration, model artifacts, the confidence
//! filter and the command implementations used by the CLI.

pub mod app;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod knn;
pub mod matrix;
pub mod models;
pub mod neural;
pub mod trees;

pub use error::{Error, Result};
pub use data::Dataset;
pub use matrix::Matrix;

/// Class label: 0 = benign, 1 = malicious.
pub type Label = u8;

pub const BENIGN: Label = 0;
pub const MALICIOUS: Label = 1;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
