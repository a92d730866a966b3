//! `solarens`: synthetic data, preprocessing, feature analysis, model
//! training, evaluation, comparison and the physical baseline.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use solarens::{ModelKind, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "solarens", version, about = "Solar PV power forecasting test-bed")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; omitted keys keep their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; 1 gives serial timing.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory, overriding the config file.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic weather and power CSV.
    Synth {
        /// Number of days, overriding the config file.
        #[arg(long)]
        days: Option<usize>,
    },
    /// Project average readings, impute missing cells and drop low-power rows.
    Preprocess {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Feature importance, correlation pruning and per-feature densities.
    Analyze {
        /// Defaults to `<out>/cleaned.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit one model on the training split and save it.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
        /// Feature list, one name per line; defaults to `<out>/selected_features.txt`
        /// when present, else every non-target column.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Fit on every row instead of the training split.
        #[arg(long)]
        all_rows: bool,
    },
    /// Predict every row of a CSV with a saved model.
    Predict {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        model_file: PathBuf,
    },
    /// Score a saved model on the test split.
    Evaluate {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        model_file: PathBuf,
    },
    /// Fit and rank a roster of models on repeated train/test splits.
    Compare {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Comma-separated model kinds; defaults to the configured roster.
        #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
        models: Option<Vec<ModelKind>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Compare the analytic plant model with logged power.
    Physical {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).map_err(|e| e.to_string())
}

/// Diagnostic lines plus the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub lines: Vec<String>,
}

impl Failure {
    pub const VALIDATION: u8 = 2;
    pub const FIT: u8 = 3;

    pub fn fit(model: ModelKind, e: &solarens::Error) -> Self {
        Failure {
            code: Self::FIT,
            lines: vec![format!("fit failed for {model}: {e}")],
        }
    }
}

impl From<solarens::Error> for Failure {
    fn from(e: solarens::Error) -> Self {
        Failure {
            code: Self::VALIDATION,
            lines: vec![e.to_string()],
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(solarens::Error::Config("--threads must be >= 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| solarens::Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&cli.common)?;
    let serial = cli.common.threads == Some(1);
    match cli.command {
        Command::Synth { days } => commands::synth(&cfg, days),
        Command::Preprocess { input } => commands::preprocess(&cfg, input),
        Command::Analyze { input } => commands::analyze(&cfg, input),
        Command::Train {
            input,
            model,
            features,
            all_rows,
        } => commands::train(&cfg, input, model, features, all_rows),
        Command::Predict { input, model_file } => commands::predict(&cfg, input, &model_file),
        Command::Evaluate { input, model_file } => commands::evaluate(&cfg, input, &model_file),
        Command::Compare {
            input,
            models,
            repeats,
            features,
        } => commands::compare(&cfg, input, models, repeats, features, serial),
        Command::Physical { input } => commands::physical(&cfg, input),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            for line in &f.lines {
                eprintln!("error: {line}");
            }
            ExitCode::from(f.code)
        }
    }
}
