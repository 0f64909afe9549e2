//! The `mbc` command line: ingest trips, generate a synthetic corpus, build
//! kernel banks, run the sweep experiments, simulate the link and summarize
//! results.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mbc_core::bank::{ReuseEval, Scheme};
use mbc_core::mbcsim::{LinkMode, WindowPolicy};

pub use config::{resolve, Overrides, RunConfig, SEED_ENV};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "mbc",
    version,
    about = "Gaussian-process kernel banks for model-based communication"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command that reads a configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory of trip CSVs or an ingested corpus.json.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// direct or indirect.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Add the constant-velocity candidate.
    #[arg(long, conflicts_with = "solo")]
    pub hybrid: bool,
    /// GP candidates only.
    #[arg(long)]
    pub solo: bool,
    /// PTE threshold in meters.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Training window length in samples.
    #[arg(long)]
    pub tw: Option<usize>,
    /// Cap on candidate evaluation in seconds.
    #[arg(long)]
    pub horizon_cap: Option<f64>,
    /// first_step or fixed_1s.
    #[arg(long)]
    pub reuse_eval: Option<ReuseEval>,
    /// Seed for hyperparameter restarts.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic corpus size.
    #[arg(long)]
    pub trips: Option<usize>,
    /// Synthetic corpus preset: default or three_regime.
    #[arg(long)]
    pub mix: Option<String>,
    /// Synthetic corpus seed.
    #[arg(long)]
    pub synth_seed: Option<u64>,
}

impl ConfigArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            corpus: self.corpus.clone(),
            scheme: self.scheme,
            hybrid: if self.hybrid {
                Some(true)
            } else if self.solo {
                Some(false)
            } else {
                None
            },
            pte_threshold_m: self.threshold,
            tw: self.tw,
            horizon_cap_s: self.horizon_cap,
            reuse_eval: self.reuse_eval,
            seed: self.seed,
            output_dir: self.out.clone(),
            synth_trips: self.trips,
            synth_mix: self.mix.clone(),
            synth_seed: self.synth_seed,
            ..Default::default()
        }
    }

    pub fn resolve(&self, extra: Overrides) -> CliResult<RunConfig> {
        let mut o = self.overrides();
        o.link_mode = extra.link_mode;
        o.window = extra.window;
        let env = std::env::var(SEED_ENV).ok();
        resolve(self.config.as_deref(), &o, env.as_deref())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a directory of trip CSVs, rank the trips and cache them.
    Ingest {
        dir: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Write a synthetic corpus as trip CSVs plus the scripts behind them.
    Synth {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Build one kernel bank.
    Build {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Run the threshold, training-window and shuffle experiments.
    Sweep {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Simulate the link and write packet logs and the receiver trace.
    Simulate {
        #[command(flatten)]
        args: ConfigArgs,
        /// Bank file to start from; required for a frozen solo link.
        #[arg(long)]
        bank: Option<PathBuf>,
        /// growing or frozen.
        #[arg(long)]
        mode: Option<LinkMode>,
        /// anchor_only or always.
        #[arg(long)]
        window: Option<WindowPolicy>,
    },
    /// Summarize an output directory; replays packet logs when present.
    Report { dir: PathBuf },
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest { dir, args } => commands::ingest(&dir, &args.resolve(Overrides::default())?),
        Command::Synth { args } => commands::synth(&args.resolve(Overrides::default())?),
        Command::Build { args } => commands::build(&args.resolve(Overrides::default())?),
        Command::Sweep { args } => commands::sweep(&args.resolve(Overrides::default())?),
        Command::Simulate {
            args,
            bank,
            mode,
            window,
        } => {
            let extra = Overrides {
                link_mode: mode,
                window,
                ..Default::default()
            };
            commands::simulate(&args.resolve(extra)?, bank.as_deref())
        }
        Command::Report { dir } => commands::report(&dir),
    }
}
