//! Command line driver for the self-consistent standard map experiments.
//!
//! Subcommands cover the reference experiments end to end: `simulate` (the
//! coupled-map trajectory), `escape` and `horn` (alternating-map transport
//! scans), `circles` (invariant circles, turnstile band and crossing
//! witness), `spo` (sequential-orbit branches with the drift solved per
//! point) and `nform` (the exact normal-form report). `validate` checks a
//! configuration against every module precondition without running.
//!
//! All seeding is lattice based and all aggregation is order independent,
//! so two runs with the same configuration produce bitwise-identical CSVs
//! regardless of `--workers`.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use config::{build, validate, Kind, RawConfig};

#[derive(Parser)]
#[command(name = "scmap", version, about = "Self-consistent standard map experiments")]
struct Cli {
    /// Configuration file (key = value sections per experiment kind).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for the experiment's CSVs, plot scripts and manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for seed/cell parallel sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Override one configuration value, e.g. --set steps=100 (repeatable);
    /// keys apply to the invoked experiment's section and win over the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled-map trajectory with snapshots (mean-field evolution).
    Simulate,
    /// Escape-fraction scan of the alternating map over (κ̄, Δκ) cells.
    Escape,
    /// Global-transport horn boundary: minimal κ₂ per κ₁ by bisection.
    Horn,
    /// Invariant circles, turnstile band and crossing witness.
    Circles,
    /// Sequential-periodic-orbit branches with Ω solved per point.
    Spo,
    /// Exact normal-form report for a rotation number p/q.
    Nform,
    /// Check a configuration against all module preconditions.
    Validate,
}

impl Command {
    fn kind(&self) -> Option<Kind> {
        match self {
            Command::Simulate => Some(Kind::Trajectory),
            Command::Escape => Some(Kind::Escape),
            Command::Horn => Some(Kind::Horn),
            Command::Circles => Some(Kind::Circles),
            Command::Spo => Some(Kind::Spo),
            Command::Nform => Some(Kind::Nform),
            Command::Validate => None,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };

    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .context("configuring worker pool")?;
    }

    match cli.command.kind() {
        None => {
            // `validate`: check every section that exists (or all defaults).
            let mut violations = Vec::new();
            for kind in Kind::ALL {
                let cfg = build(kind, &raw)?;
                violations.extend(validate(&cfg, &raw));
            }
            if violations.is_empty() {
                println!("ok: configuration satisfies all preconditions");
                Ok(())
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                Err(anyhow!("{} violation(s)", violations.len()))
            }
        }
        Some(kind) => {
            for item in &cli.set {
                let (key, value) = item
                    .split_once('=')
                    .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{item}`"))?;
                raw.set(kind.section(), key.trim(), value.trim());
            }
            let cfg = build(kind, &raw)?;
            let violations = validate(&cfg, &raw);
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("violation: {v}");
                }
                return Err(anyhow!("invalid configuration ({} violations)", violations.len()));
            }
            experiments::run(&cfg, &cli.out)?;
            println!("ok: wrote {} experiment to {}", kind, cli.out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
