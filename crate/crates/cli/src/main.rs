//! `drive-ep`: ingest, simulate, fit, evaluate and report drive-level
//! expected points models.
//!
//! Every invocation writes into one run directory: its outputs, the fully
//! resolved `config.toml` (enough to repeat the run given the same inputs)
//! and a `manifest.json` with config and data hashes.
//!
//! Exit status: 0 on success, 2 for configuration or usage errors, 3 for
//! data errors, 4 for numeric failures. Failures print one line to stderr:
//! `error[<category>]: <reason>`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drive_ep::epa::Entity;
use drive_ep::{Error, ErrorCategory};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "drive-ep", version, about = "Drive-level expected points models")]
pub struct Cli {
    /// Run config (TOML). Flags override values from the file.
    #[arg(long, global = true, env = "DRIVE_EP_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "DRIVE_EP_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "DRIVE_EP_THREADS")]
    pub threads: Option<usize>,
    /// Run directory for all outputs.
    #[arg(long, global = true, env = "DRIVE_EP_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw play-by-play CSV into the canonical play table.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Generate a synthetic league with a known outcome model.
    Simulate {
        #[arg(long)]
        n_drives: Option<usize>,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Grid-search boosted-tree hyperparameters on a drive-level split.
    Tune(DataArgs),
    /// Fit the configured trainer.
    Train(DataArgs),
    /// Score a saved model (and optionally a bootstrap ensemble) on test data.
    Evaluate(DataArgs),
    /// Fit a bootstrap ensemble of the configured trainer.
    Bootstrap {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        b: Option<usize>,
    },
    /// Fit catalytic-prior models over a grid of phi.
    Catalytic {
        #[command(flatten)]
        data: DataArgs,
        /// Replaces the configured grid; repeatable.
        #[arg(long)]
        phi: Vec<f64>,
    },
    /// Per-play EPA aggregated by team or passer/rusher.
    Epa {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        entity: Option<EntityArg>,
        #[arg(long)]
        season: Option<i32>,
        #[arg(long)]
        min_plays: Option<usize>,
        /// Also write the long-format estimate/interval table.
        #[arg(long)]
        plot_data: bool,
    },
    /// Play share and points per drive by team quality.
    Summary(DataArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub plays: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum EntityArg {
    Team,
    PasserOrRusher,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Simulate { .. } => "simulate",
            Command::Tune(_) => "tune",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Bootstrap { .. } => "bootstrap",
            Command::Catalytic { .. } => "catalytic",
            Command::Epa { .. } => "epa",
            Command::Summary(_) => "summary",
        }
    }
}

/// Fold flags into the file config.
fn resolve(cli: &Cli) -> drive_ep::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    let mut data_args = |a: &DataArgs| {
        let d = &mut cfg.data;
        for (slot, flag) in [
            (&mut d.train, &a.train),
            (&mut d.test, &a.test),
            (&mut d.plays, &a.plays),
            (&mut d.model, &a.model),
            (&mut d.ensemble, &a.ensemble),
        ] {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
    };
    match &cli.command {
        Command::Ingest { input, test_fraction } => {
            if input.is_some() {
                cfg.data.input = input.clone();
            }
            if test_fraction.is_some() {
                cfg.data.test_fraction = *test_fraction;
            }
        }
        Command::Simulate { n_drives, test_fraction } => {
            if let Some(n) = n_drives {
                cfg.synth.n_drives = *n;
            }
            if test_fraction.is_some() {
                cfg.data.test_fraction = *test_fraction;
            }
            cfg.synth.seed = cfg.seed;
        }
        Command::Tune(a) | Command::Train(a) | Command::Evaluate(a) | Command::Summary(a) => data_args(a),
        Command::Bootstrap { data, b } => {
            data_args(data);
            if let Some(b) = b {
                cfg.bootstrap.b = *b;
            }
        }
        Command::Catalytic { data, phi } => {
            data_args(data);
            if !phi.is_empty() {
                cfg.catalytic.phi_grid = phi.clone();
            }
        }
        Command::Epa {
            data,
            entity,
            season,
            min_plays,
            plot_data,
        } => {
            data_args(data);
            if let Some(e) = entity {
                cfg.epa.entity = match e {
                    EntityArg::Team => Entity::Team,
                    EntityArg::PasserOrRusher => Entity::PasserOrRusher,
                };
            }
            if season.is_some() {
                cfg.epa.season = *season;
            }
            if let Some(m) = min_plays {
                cfg.epa.min_plays = *m;
            }
            cfg.epa.plot_data |= *plot_data;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn category_label(c: ErrorCategory) -> (&'static str, u8) {
    match c {
        ErrorCategory::Config => ("config", 2),
        ErrorCategory::Data => ("data", 3),
        ErrorCategory::Numeric => ("numeric", 4),
    }
}

fn fail(label: &str, code: u8, message: &str) -> ExitCode {
    let line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error[{label}]: {line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            return fail("config", 2, &first);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("config", 2, &format!("cannot start {n} threads: {e}"));
        }
    }
    let result = resolve(&cli).and_then(|cfg| commands::run(cli.command.name(), &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (label, code) = category_label(e.category());
            fail(label, code, &error_chain(&e))
        }
    }
}

fn error_chain(e: &Error) -> String {
    let mut s = e.to_string();
    let mut src = std::error::Error::source(e);
    while let Some(inner) = src {
        let t = inner.to_string();
        if !s.contains(&t) {
            s.push_str(": ");
            s.push_str(&t);
        }
        src = inner.source();
    }
    s
}
