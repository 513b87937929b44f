use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use socgcf_cli::commands::{self, ExperimentKind};
use socgcf_cli::config::RunConfig;
use socgcf_cli::manifest::RunManifest;
use socgcf_cli::pipeline::{Dataset, SplitName};
use socgcf_cli::CliError;

/// Social graph collaborative filtering with community-derived user
/// embeddings.
#[derive(Parser, Debug)]
#[command(name = "socgcf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset preset (douban-book, yelp, epinions) applied before the file.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    interactions: Option<PathBuf>,
    #[arg(long, global = true)]
    social: Option<PathBuf>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    no_sia: bool,
    #[arg(long, global = true)]
    sum_fusion: bool,
    #[arg(long, global = true)]
    no_ssl: bool,
    #[arg(long, global = true)]
    baseline_lightgcn: bool,
    /// Use the rayon thread pool for the inner loops.
    #[arg(long, global = true)]
    parallel: bool,
    /// Override any configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Check the manifest in the output directory instead of running.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect overlapping communities in the social graph.
    Detect,
    /// Train and save the best checkpoint.
    Train,
    /// Evaluate a checkpoint on the validation or test split.
    Eval {
        #[arg(long, default_value = "test")]
        split: String,
        /// Defaults to checkpoint.bin in the output directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run an experiment protocol: coldstart, noise, degree or params.
    Experiment { kind: String },
    /// Parameter census against the per-user embedding baseline.
    Params,
}

fn build_config(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), _) => {
            let mut cfg = RunConfig::load(path)?;
            if let Some(p) = &c.preset {
                let text = std::fs::read_to_string(path).unwrap_or_default();
                cfg = RunConfig::parse_text(&format!("preset = {p}\n{text}"), path.parent())?;
            }
            cfg
        }
        (None, Some(p)) => RunConfig::preset(p)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = &c.interactions {
        cfg.interactions = Some(v.clone());
    }
    if let Some(v) = &c.social {
        cfg.social = Some(v.clone());
    }
    if let Some(v) = c.epochs {
        cfg.max_epochs = v;
    }
    cfg.no_sia |= c.no_sia;
    cfg.sum_fusion |= c.sum_fusion;
    cfg.no_ssl |= c.no_ssl;
    cfg.baseline_lightgcn |= c.baseline_lightgcn;
    cfg.parallel |= c.parallel;
    for kv in &c.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(&cli.common)?;
    if cli.common.verify {
        let problems = RunManifest::verify(&cfg.out, &cfg.hash_hex())?;
        if problems.is_empty() {
            println!("manifest verified: {}", cfg.out.display());
            return Ok(());
        }
        for p in &problems {
            eprintln!("{p}");
        }
        return Err(CliError::Data(format!("{} manifest problem(s)", problems.len())));
    }
    let dataset = Dataset::load(&cfg)?;
    match cli.command {
        Command::Detect => commands::detect(&cfg, dataset).map(drop),
        Command::Train => commands::train(&cfg, dataset).map(drop),
        Command::Eval { split, checkpoint } => {
            let split: SplitName = split.parse()?;
            commands::eval(&cfg, dataset, checkpoint.as_deref(), split).map(drop)
        }
        Command::Experiment { kind } => {
            let kind: ExperimentKind = kind.parse()?;
            commands::experiment(&cfg, dataset, kind).map(drop)
        }
        Command::Params => commands::params(&cfg, dataset).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
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
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
