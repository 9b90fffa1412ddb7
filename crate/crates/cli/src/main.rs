mod config;
mod ensemble;
mod error;
mod output;
mod single;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hma_ee::cluster::ClusterInstance;

use config::{load, EnsembleConfig, PhaseConfig, SweepConfig};
use error::Result;
use verify::{Scope, VerifyOptions};

/// Trials used by `--quick`.
const QUICK_TRIALS: usize = 50;

#[derive(Parser, Debug)]
#[command(name = "hma-ee", version, about = "Energy-efficient power allocation and user-RB association for uplink hybrid NOMA/OMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON input (instance or experiment config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// CSV output; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the number of trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Cuts trial counts down to 50 for smoke runs.
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-user minimum powers against caps for one cluster instance.
    Feasibility,
    /// EE and powers of one cluster over a range of power caps.
    Sweep,
    /// Two-user corner derivatives, phases and closed-form vs numeric powers.
    Phase,
    /// Average system EE of association schemes over random drops.
    Ensemble,
    /// Cross-checks solvers against brute-force oracles.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        scope: Scope,
        /// Largest relative EE gap accepted for the cluster check.
        #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
        tolerance: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    let out = cli.out.as_deref();
    let trials = |default: usize| cli.trials.unwrap_or(if cli.quick { QUICK_TRIALS.min(default) } else { default });
    match cli.command {
        Command::Feasibility => {
            let instance: ClusterInstance = load(config)?;
            single::feasibility(&instance, out)
        }
        Command::Sweep => single::sweep(&load::<SweepConfig>(config)?, cli.seed, out),
        Command::Phase => single::phase(&load::<PhaseConfig>(config)?, out),
        Command::Ensemble => {
            let mut cfg: EnsembleConfig = load(config)?;
            cfg.trials = trials(cfg.trials);
            if let Some(seed) = cli.seed {
                cfg.base_seed = seed;
            }
            ensemble::ensemble(&cfg, out)
        }
        Command::Verify { scope, tolerance } => verify::verify(
            &VerifyOptions {
                scope,
                seed: cli.seed.unwrap_or(0),
                cluster_trials: trials(100),
                matching_trials: trials(50),
                tolerance,
            },
            out,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
