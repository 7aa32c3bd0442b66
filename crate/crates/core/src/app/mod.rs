//! Configuration, model artifacts, the confidence filter and the command
//! implementations behind the CLI.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod filter;
pub mod pipeline;

pub use artifact::{load_model, save_model, ModelArtifact, TrainingMetadata, FORMAT_VERSION};
pub use commands::{cmd_compare, cmd_evaluate, cmd_predict, cmd_report, cmd_train, StageError};
pub use config::{ClassifierChoice, FeatureMode, PipelineConfig};
pub use filter::{filter_predictions, Verdict, VerdictLabel};
pub use pipeline::{load_dataset, LoadedData, Preprocessor};
