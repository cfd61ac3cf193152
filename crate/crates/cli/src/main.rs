// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! `nvreg` command-line front end.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Outcome;
use config::Loaded;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "nvreg", version, about = "NV three-spin register simulator")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `run.output_dir`.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, overriding `run.workers` (0 = all cores).
    #[arg(short, long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tracked energy levels, z-fidelities and avoided crossings versus field.
    Levels,
    /// Transition frequencies and drive matrix elements.
    Transitions,
    /// Evolve a dressed eigenstate under the configured pulse schedule.
    Pulse,
    /// Optimise π-pulse gates or sweep fidelity versus drive power.
    Scan,
    /// Run a multi-pulse sequence against its ideal composition.
    Sequence,
    /// Derived-gate table, alternatives and dependency graph.
    Compose,
    /// Randomised invariant suite.
    Selftest {
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        std::fs::write(dir.join(&a.name), &a.body)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut loaded = match &cli.config {
        Some(p) => Loaded::from_file(p)?,
        None => Loaded::defaults(),
    };
    if let Command::Selftest { instances, seed } = &cli.command {
        if let Some(n) = instances {
            loaded.config.selftest.instances = *n;
        }
        if let Some(s) = seed {
            loaded.config.selftest.seed = *s;
        }
    }
    let workers = cli.workers.unwrap_or(loaded.config.run.workers);
    let dir = cli.out.clone().unwrap_or_else(|| loaded.config.run.output_dir.clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let outcome = pool.install(|| match cli.command {
        Command::Levels => commands::levels(&loaded),
        Command::Transitions => commands::transitions(&loaded),
        Command::Pulse => commands::pulse(&loaded),
        Command::Scan => commands::scan(&loaded),
        Command::Sequence => commands::sequence(&loaded),
        Command::Compose => commands::compose(&loaded),
        Command::Selftest { .. } => commands::selftest(&loaded),
    })?;
    write_outputs(&dir, &outcome)?;
    print!("{}", outcome.summary);
    for a in &outcome.artifacts {
        println!("wrote {}", dir.join(&a.name).display());
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvreg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
