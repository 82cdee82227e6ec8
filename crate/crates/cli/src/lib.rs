//! Command-line experiments around the `sam-core` estimator.

pub mod commands;
pub mod config;
pub mod output;
pub mod validation;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::commands::{Outcome, Run};
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "sam", version, about = "Simultaneous acceptance likelihood estimation for scalar diffusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Simulate a dataset.
    Simulate,
    /// Draw one diffusion-bridge skeleton with the exact algorithm.
    SimulateBridge,
    /// Monte Carlo maximum likelihood, optionally over a ladder of bank sizes.
    Estimate,
    /// Log-likelihood on a grid over the box.
    Surface,
    /// Profile log-likelihood of one coordinate.
    Profile,
    /// Replicated Monte Carlo error of the maximizer at several bank sizes.
    Table2,
    /// Sampling behaviour of the maximizer as the dataset grows.
    Nscaling,
    /// Run validation checks; exits nonzero if any fails.
    Validate,
}

/// Builds the run from the file, flag and override layers.
pub fn prepare(cli: &Cli) -> Result<Run> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_text(&text)?
        }
        None => RunConfig::default(),
    };
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(t) = cli.threads {
        cfg.set("threads", &t.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.set("out", &out.display().to_string())?;
    }
    let seed = cfg.seed()?;
    let out = PathBuf::from(cfg.str_or("out", "."));
    Ok(Run { cfg, seed, out })
}

pub fn execute(command: Command, run: &Run) -> Result<Outcome> {
    match command {
        Command::Simulate => commands::simulate(run),
        Command::SimulateBridge => commands::simulate_bridge(run),
        Command::Estimate => commands::estimate(run),
        Command::Surface => commands::surface(run),
        Command::Profile => commands::profile_cmd(run),
        Command::Table2 => commands::table2(run),
        Command::Nscaling => commands::nscaling(run),
        Command::Validate => commands::validate(run),
    }
}
