use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use saa_core::strategies::StrategyRegistry;
use saa_experiments::ExperimentConfig;

#[derive(Parser)]
#[command(name = "saa", version, about = "Simultaneous ascending auction simulator and bidding advisor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured instances to <out>/instances.json.
    Generate(RunArgs),
    /// Compute closing-price predictions with their convergence traces.
    Predict(RunArgs),
    /// Play every profile on every instance; resumes an interrupted run.
    Tournament(RunArgs),
    /// Run one tournament per point of the config's [sweep] grid.
    Sweep(RunArgs),
    /// Regenerate metrics and reports from an existing run directory.
    Report {
        /// Run directory (holding manifest.json), or a sweep directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the advisor HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config =
            ExperimentConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        if let Some(out) = &self.out {
            config.output = out.clone();
        }
        Ok(config)
    }
}

fn report(dir: &Path) -> Result<()> {
    if dir.join(saa_experiments::archive::MANIFEST).exists() {
        saa_experiments::regenerate(dir)?;
        println!("regenerated {}", dir.display());
        return Ok(());
    }
    let mut found = 0;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for sub in entries {
        if sub.join(saa_experiments::archive::MANIFEST).exists() {
            saa_experiments::regenerate(&sub)?;
            println!("regenerated {}", sub.display());
            found += 1;
        }
    }
    if found == 0 {
        bail!("{} holds no run manifest", dir.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let registry = StrategyRegistry::with_builtins();
    match cli.command {
        Command::Generate(args) => {
            let path = saa_experiments::generate(&args.load()?)?;
            println!("wrote {}", path.display());
        }
        Command::Predict(args) => {
            let config = args.load()?;
            for p in saa_experiments::predict(&config)? {
                let prices: Vec<String> = p.prediction.iter().map(|x| format!("{x:.3}")).collect();
                let status = if p.converged { "converged" } else { "max iterations" };
                println!("instance {}: p* = ({}) after {} steps, {status}", p.instance, prices.join(", "), p.iterations);
            }
        }
        Command::Tournament(args) => {
            let s = saa_experiments::run_tournament(&args.load()?, &registry)?;
            println!("{}: {} cells played, {} already present", s.output.display(), s.cells_run, s.cells_skipped);
        }
        Command::Sweep(args) => {
            for (point, s) in saa_experiments::run_sweep(&args.load()?, &registry)? {
                println!("{}: {} cells played, {} already present", point.label(), s.cells_run, s.cells_skipped);
            }
        }
        Command::Report { out } => report(&out)?,
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("binding {addr}"))?;
                log::info!("advisor listening on {}", listener.local_addr()?);
                saa_advisor::serve(listener, Arc::new(saa_advisor::AdvisorService::new())).await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
    }
    Ok(())
}
