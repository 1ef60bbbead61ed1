//! `subreg`: command-line front end for the regularity toolkit.
//!
//! Exit status: 0 when every claim was confirmed, 1 when a claim failed
//! validation, 2 on invalid input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{Outcome, Output, Overrides, UsageError};
use config::{CounterexampleConfig, ExperimentConfig};

#[derive(Parser)]
#[command(name = "subreg", version, about = "Regularity oracles, certificates and path following")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; falls back to $SUBREG_OUT_DIR, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Slack on propagated constants.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Brute-force modulus estimates.
    Estimate,
    /// Certificates with propagation and validation.
    Certify,
    /// Uniform certificate over a sampled compact set.
    Uniformize,
    /// Path following with trajectory certification.
    Follow,
    /// Divergence of the strong modulus under a calm perturbation.
    Counterexample,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Certify => "certify",
            Command::Uniformize => "uniformize",
            Command::Follow => "follow",
            Command::Counterexample => "counterexample",
        }
    }
}

fn load(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| UsageError(format!("{e:#}")))?;
    let cfg = ExperimentConfig::parse(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    if cfg.operation() != cli.command.name() {
        return Err(UsageError(format!(
            "config is for `{}`, not `{}`",
            cfg.operation(),
            cli.command.name()
        ))
        .into());
    }
    Ok(Some(cfg))
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(n) = cli.parallel {
        if n == 0 {
            return Err(UsageError("--parallel must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = load(&cli)?;
    let out = Output::new(commands::resolve_out(cli.out.clone()))?;
    let ov = Overrides {
        eta: cli.eta,
        tol: cli.tol,
    };
    let missing = || UsageError(format!("`{}` needs --config", cli.command.name()));
    match (cli.command, cfg) {
        (Command::Counterexample, None) => commands::counterexample(&CounterexampleConfig::default(), &out),
        (Command::Counterexample, Some(ExperimentConfig::Counterexample(c))) => commands::counterexample(&c, &out),
        (Command::Estimate, Some(ExperimentConfig::Estimate(c))) => commands::estimate(&c, &out),
        (Command::Certify, Some(ExperimentConfig::Certify(c))) => {
            commands::certify(&c, ov.eta.unwrap_or(c.eta), &out)
        }
        (Command::Uniformize, Some(ExperimentConfig::Uniformize(c))) => {
            let eta = ov.eta.unwrap_or(c.options.eta);
            commands::run_uniformize(&c, eta, &out)
        }
        (Command::Follow, Some(ExperimentConfig::Follow(c))) => commands::run_follow(&c, &ov, &out),
        (_, None) => Err(missing().into()),
        (_, Some(_)) => unreachable!("operation checked in load"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Confirmed) => ExitCode::SUCCESS,
        Ok(Outcome::Violated) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let io = e.chain().any(|c| c.is::<std::io::Error>() || c.is::<UsageError>());
            if io {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
