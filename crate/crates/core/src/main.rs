use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infocollab::cli::{self, CliError};
use infocollab::{Policy, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "infocollab",
    about = "Two-agent joint-entropy measurement simulator"
)]
struct Options {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Selection policy, overriding the configuration.
    #[arg(long)]
    policy: Option<Policy>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode; writes episode.jsonl and posterior.csv.
    Run(Common),
    /// Write entropy maps (CSV and PGM) for the configured posterior.
    Map {
        #[command(flatten)]
        common: Common,
        /// Fixed first measurement `x,y`; adds joint-entropy and MI maps.
        #[arg(long, allow_hyphen_values = true)]
        e1: Option<String>,
    },
    /// Compare policies over several seeds; writes policy_comparison.csv.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Seeds as a list and/or half-open ranges, e.g. `0..100` or `1,5,9`.
        #[arg(long)]
        seeds: String,
    },
}

fn load(common: &Common, policy_restricts_compare: bool) -> Result<RunConfig, CliError> {
    let mut config = cli::load_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(policy) = common.policy {
        config.policy = policy;
        if policy_restricts_compare {
            config.compare_policies = vec![policy];
        }
    }
    Ok(config)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(common) => {
            let config = load(&common, false)?;
            report(cli::cmd_run(&config, &common.out)?);
        }
        Command::Map { common, e1 } => {
            let config = load(&common, false)?;
            let e1 = e1.as_deref().map(cli::parse_location).transpose()?;
            report(cli::cmd_map(&config, e1, &common.out)?);
        }
        Command::Compare { common, seeds } => {
            let config = load(&common, true)?;
            let seeds = cli::parse_seeds(&seeds)?;
            report(vec![cli::cmd_compare(&config, &seeds, &common.out)?]);
        }
    }
    Ok(())
}

fn report(paths: Vec<PathBuf>) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    let options = Options::parse();
    match execute(options.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
