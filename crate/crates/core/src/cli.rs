//! Subcommand bodies for the `infocollab` binary.
//!
//! Output files are written to a temporary name in the output directory and
//! renamed into place, so a failed command never leaves a partial file.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::collab::{compare_policies, run_episode, run_round, summaries_to_csv, CollabError};
use crate::config::{ConfigError, RunConfig};
use crate::design::{
    entropy_map, joint_entropy_map, mutual_information_map, DesignError, EntropyMap,
};
use crate::inference::{init_prior, GridPosterior};
use crate::world::MeasurementLocation;

pub const EPISODE_LOG: &str = "episode.jsonl";
pub const POSTERIOR_CSV: &str = "posterior.csv";
pub const ENTROPY_MAP: &str = "entropy_map";
pub const JOINT_ENTROPY_MAP: &str = "joint_entropy_map";
pub const MUTUAL_INFORMATION_MAP: &str = "mutual_information_map";
pub const COMPARISON_CSV: &str = "policy_comparison.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Episode(#[from] CollabError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(io_error(&tmp))?;
    fs::rename(&tmp, &target).map_err(io_error(&target))?;
    Ok(target)
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    Ok(crate::config::parse_config(&text)?)
}

/// Parses `x,y`.
pub fn parse_location(text: &str) -> Result<MeasurementLocation, CliError> {
    let bad = || CliError::Usage(format!("expected <x,y>, got {text:?}"));
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(bad());
    }
    Ok(MeasurementLocation::new(x, y))
}

/// Parses a comma-separated list of seeds and half-open ranges, e.g. `1,2,10..20`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || CliError::Usage(format!("bad seed {part:?}"));
        match part.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.parse().map_err(|_| bad())?;
                let b: u64 = b.parse().map_err(|_| bad())?;
                seeds.extend(a..b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(CliError::Usage("the seed list is empty".into()));
    }
    Ok(seeds)
}

/// Runs one episode and writes its log and final posterior.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let log = run_episode(&config.scenario(), config.seed)?;
    Ok(vec![
        write_atomic(out, EPISODE_LOG, log.to_jsonl().as_bytes())?,
        write_atomic(out, POSTERIOR_CSV, log.posterior.to_csv().as_bytes())?,
    ])
}

/// Posterior after `warmup_rounds` rounds of the configured episode.
pub fn warmed_posterior(config: &RunConfig) -> Result<GridPosterior, CliError> {
    let scenario = config.scenario();
    let truth = crate::collab::resolve_truth(&scenario, config.seed);
    let mut posterior = init_prior(config.grid.clone());
    for round in 1..=config.warmup_rounds {
        posterior = run_round(
            &posterior,
            &truth,
            &config.sensor,
            config.policy,
            &config.map,
            config.mode,
            round,
            config.seed,
        )
        .map_err(|source| CollabError::Round { round, source })?
        .0;
    }
    Ok(posterior)
}

fn write_map(out: &Path, stem: &str, map: &EntropyMap) -> Result<Vec<PathBuf>, CliError> {
    Ok(vec![
        write_atomic(out, &format!("{stem}.csv"), map.to_csv().as_bytes())?,
        write_atomic(out, &format!("{stem}.pgm"), &map.to_pgm())?,
    ])
}

/// Writes the entropy map, plus the joint-entropy and mutual-information maps
/// against `e1` when given.
pub fn cmd_map(
    config: &RunConfig,
    e1: Option<MeasurementLocation>,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let posterior = warmed_posterior(config)?;
    let mode = config.mode.reseeded(crate::collab::child_seed(
        config.seed,
        config.warmup_rounds + 1,
        crate::collab::Stream::Selection,
    ));
    let mut written = write_map(
        out,
        ENTROPY_MAP,
        &entropy_map(&posterior, &config.sensor, &config.map, mode)?,
    )?;
    if let Some(e1) = e1 {
        if !config.field.contains(e1.x, e1.y) {
            return Err(CliError::Usage(format!(
                "E1 ({}, {}) lies outside the field",
                e1.x, e1.y
            )));
        }
        let joint = joint_entropy_map(&posterior, &config.sensor, &e1, &config.map, mode)?;
        written.extend(write_map(out, JOINT_ENTROPY_MAP, &joint)?);
        let mi = mutual_information_map(&posterior, &config.sensor, &e1, &config.map, mode)?;
        written.extend(write_map(out, MUTUAL_INFORMATION_MAP, &mi)?);
    }
    Ok(written)
}

/// Runs every configured policy on every seed and writes the summary table.
pub fn cmd_compare(config: &RunConfig, seeds: &[u64], out: &Path) -> Result<PathBuf, CliError> {
    if seeds.is_empty() {
        return Err(CliError::Usage("the seed list is empty".into()));
    }
    let rows = compare_policies(&config.scenario(), &config.compare_policies, seeds)?;
    write_atomic(out, COMPARISON_CSV, summaries_to_csv(&rows).as_bytes())
}
