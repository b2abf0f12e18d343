//! `demandrec` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "demandrec",
    version,
    about = "Demand-aware recommendation from purchase logs"
)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level random seed (overrides the `seed` key).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for every output file.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Override one configuration key, e.g. `--set lambda=0.5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instance with known durations.
    Synth,
    /// Split a purchase log, fit a model and save it.
    Train,
    /// Score a trained model on its held-out records.
    Evaluate,
    /// Print the top-N items for one user at one slot.
    Recommend,
    /// Write the spectra of a low-rank utility and its time-penalized version.
    RankDemo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Recommend => "recommend",
            Command::RankDemo => "rank-demo",
        }
    }
}

fn resolve(cli: &Cli) -> demandrec::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for pair in &cli.overrides {
        cfg.apply_override(pair)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> demandrec::Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| demandrec::Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let cfg = resolve(&cli)?;
    std::fs::create_dir_all(&cli.output_dir)?;
    std::fs::write(
        cli.output_dir
            .join(format!("{}.config", cli.command.name())),
        cfg.to_text(),
    )?;
    let dir = cli.output_dir.as_path();
    match cli.command {
        Command::Synth => commands::synth(&cfg, dir),
        Command::Train => commands::train(&cfg, dir),
        Command::Evaluate => commands::evaluate(&cfg, dir),
        Command::Recommend => commands::recommend(&cfg, dir),
        Command::RankDemo => commands::rank_demo(&cfg, dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = Cli::command()
        .after_help(RunConfig::keys_help())
        .get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
