use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use urlsentry::app::commands::{self, StageError, SAFE_LIST};
use urlsentry::app::PipelineConfig;
use urlsentry::Error;

#[derive(Parser)]
#[command(name = "urlsentry", version, about = "Lexical malicious-URL detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit preprocessing and one classifier on a labeled CSV and save the model.
    Train(Common),
    /// Train all five classifiers on one split and write the comparison reports.
    Compare(Common),
    /// Score a labeled CSV with a saved model.
    Evaluate(Common),
    /// Score URLs with a saved model and write the safe list.
    Predict {
        #[command(flatten)]
        common: Common,
        /// File with one URL per line.
        #[arg(long)]
        urls: Option<PathBuf>,
        /// URLs given directly on the command line.
        #[arg(value_name = "URL")]
        inline: Vec<String>,
    },
    /// Re-render the accuracy chart from a comparison CSV.
    Report(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Labeled CSV (url,type), or a comparison CSV for `report`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// raw | latent
    #[arg(long)]
    features: Option<String>,
    /// mlp | knn | xgb | gb | rf | all
    #[arg(long)]
    classifier: Option<String>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

fn resolve(common: &Common) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        cfg.apply_kv_text(&text).map_err(|e| usage(format!("config: {e}")))?;
    }
    let flags: [(&str, Option<String>); 7] = [
        ("data", common.data.as_ref().map(|p| p.display().to_string())),
        ("model", common.model.as_ref().map(|p| p.display().to_string())),
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ("seed", common.seed.map(|s| s.to_string())),
        ("threshold", common.threshold.map(|t| t.to_string())),
        ("features", common.features.clone()),
        ("classifier", common.classifier.clone()),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v).map_err(|e| usage(format!("config: {e}")))?;
        }
    }
    Ok(cfg)
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    value.as_deref().ok_or_else(|| usage(format!("missing --{flag}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train(common) => {
            let cfg = resolve(&common)?;
            let data = required(&cfg.data, "data")?;
            let model = cfg.model.clone().unwrap_or_else(|| PathBuf::from("model.json"));
            let out = commands::cmd_train(&cfg, data, &model)?;
            print!("{}", out.summary);
        }
        Command::Compare(common) => {
            let cfg = resolve(&common)?;
            let data = required(&cfg.data, "data")?;
            let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let out = commands::cmd_compare(&cfg, data, &out_dir)?;
            print!("{}", out.summary);
        }
        Command::Evaluate(common) => {
            let cfg = resolve(&common)?;
            let data = required(&cfg.data, "data")?;
            let model = required(&cfg.model, "model")?;
            let out = commands::cmd_evaluate(&cfg, model, data)?;
            print!("{}", out.text);
        }
        Command::Predict { common, urls, inline } => {
            let cfg = resolve(&common)?;
            let model = required(&cfg.model, "model")?;
            let mut inputs = Vec::new();
            if let Some(path) = &urls {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("urls {}: {e}", path.display())))?;
                inputs.extend(text.lines().map(String::from));
            }
            inputs.extend(inline);
            let safe_path = match (&cfg.safe_list, &cfg.out) {
                (Some(p), _) => p.clone(),
                (None, Some(dir)) => {
                    std::fs::create_dir_all(dir).map_err(Error::from)?;
                    dir.join(SAFE_LIST)
                }
                (None, None) => PathBuf::from(SAFE_LIST),
            };
            let out = commands::cmd_predict(model, &inputs, cfg.threshold, Some(&safe_path))?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", out.verdict_lines());
            eprintln!(
                "{} safe, {} flagged; safe list: {}",
                out.safe.len(),
                out.flagged.len(),
                safe_path.display()
            );
        }
        Command::Report(common) => {
            let cfg = resolve(&common)?;
            let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let csv = cfg.data.clone().unwrap_or_else(|| out_dir.join(commands::COMPARISON_CSV));
            let path = commands::cmd_report(&csv, &out_dir)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
