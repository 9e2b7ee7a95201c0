//! `chembed-kit`: one subcommand per pipeline stage. Every invocation writes a
//! run manifest with the resolved configuration and content digests.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use commands::Ctx;
use config::{ConfigFile, Resolver};
use manifest::{write_manifest, Tracker};

/// An error in how the tool was invoked (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "chembed-kit", version, about = "Chemistry embedding adaptation pipeline")]
struct Cli {
    /// key = value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Seed for every random choice in this run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: commands::Command,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let started = Instant::now();
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut resolver = Resolver::new(&file);
    let seed = resolver.get("seed", cli.seed, 0u64)?;
    if let Some(n) = resolver.get_opt("threads", cli.threads)? {
        if n == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut ctx = Ctx {
        resolver,
        tracker: Tracker::default(),
        seed,
    };
    let name = cli.command.name();
    cli.command.execute(&mut ctx)?;

    let manifest_path = cli
        .manifest
        .or(ctx.tracker.default_manifest.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.manifest.json", name.replace(' ', "-"))));
    let manifest = ctx.tracker.finish(
        &name,
        seed,
        ctx.resolver.resolved,
        started.elapsed().as_secs_f64(),
    )?;
    write_manifest(&manifest_path, &manifest)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("usage error: {e}");
            eprintln!("run `chembed-kit --help` for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
