use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Display strings start with the variant name so that callers (and the CLI)
/// can surface a stable, greppable error kind.
#[derive(Debug, Error)]
pub enum Error {
    #[error("EmptyUrl: input is empty or whitespace-only")]
    EmptyUrl,
    #[error("InvalidFeatureSpec: {0}")]
    InvalidFeatureSpec(String),

    #[error("FileNotFound: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("MissingColumn: required column `{0}` not in header")]
    MissingColumn(String),
    #[error("MalformedRow: line {0} has the wrong number of fields")]
    MalformedRow(u64),
    #[error("UnknownLabel: `{0}` has no entry in the label mapping")]
    UnknownLabel(String),
    #[error("EmptyMatrix: operation requires at least one row")]
    EmptyMatrix,
    #[error("DegenerateSplit: {0}")]
    DegenerateSplit(String),

    #[error("DimensionMismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("SingleClassTrainingSet: training data must contain both classes")]
    SingleClassTrainingSet,
    #[error("LatentTooLarge: latent width {latent} exceeds input width {input}")]
    LatentTooLarge { latent: usize, input: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("KOutOfRange: k = {k} but model stores {n} rows")]
    KOutOfRange { k: usize, n: usize },

    #[error("EmptyNode: class counts are both zero")]
    EmptyNode,
    #[error("TooFewRows: split search needs at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("LengthMismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("EmptyInput: nothing to evaluate")]
    EmptyInput,

    #[error("ThresholdOutOfRange: {0} is not in [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("UnsupportedVersion: artifact format {found}, this build reads {supported}")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("CorruptArtifact: {0}")]
    CorruptArtifact(String),
    #[error("FeatureSpecMismatch: artifact has {artifact} features, data has {data}")]
    FeatureSpecMismatch { artifact: usize, data: usize },
    #[error("NoUrls: no URLs to score")]
    NoUrls,

    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("CsvError: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for data/config problems, 2 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            _ => 1,
        }
    }
}
