use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gmp::error::{CliError, CliResult};
use gmp::pipeline;
use gmp::runconfig::RunConfig;

/// Generative multimodal prompt model for few-shot aspect-based sentiment analysis.
#[derive(Parser)]
#[command(name = "gmp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set task=masc`. Repeatable; applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic labeled pool and test set into data_dir.
    Gencorpus(Common),
    /// Draw the stratified train/dev splits for every seed.
    Sample(Common),
    /// Train seeds x runs (x sweep values) and report test metrics.
    Train(Common),
    /// Score a checkpoint on a JSONL file.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Defaults to data_dir/test.jsonl.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config(Common),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gencorpus(c) => {
            let cfg = c.load()?;
            let (pool, test) = pipeline::gencorpus(&cfg)?;
            println!("wrote {pool} pool and {test} test instances to {}", cfg.data_dir.display());
        }
        Command::Sample(c) => {
            let cfg = c.load()?;
            print!("{}", pipeline::sample(&cfg)?);
        }
        Command::Train(c) => {
            let cfg = c.load()?;
            let report = pipeline::train(&cfg)?;
            print!("{}", report.table);
        }
        Command::Eval { common, checkpoint, data } => {
            let cfg = common.load()?;
            let data = data.unwrap_or_else(|| pipeline::test_path(&cfg));
            let m = pipeline::eval(&checkpoint, &data)?;
            print!("{}", pipeline::metrics_json(&m));
        }
        Command::Config(c) => print!("{}", c.load()?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gmp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
