//! `sympcool`: run the cooling, thermometry and coherence experiments from a
//! JSON config and write plot-ready CSV plus a replayable run manifest.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use commands::Command;
use config::{BackendKind, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "sympcool", version, about = "Sympathetic-cooling simulator for trapped-ion chains")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Equilibrium positions, normal modes and Lamb-Dicke factors.
    Modes(RunArgs),
    /// Repeated cooling cycles on one mode.
    Cool(RunArgs),
    /// Periodic cooling bursts against motional heating.
    Suppress(RunArgs),
    /// Steady-state n̄ against pulses per burst.
    Sweep(RunArgs),
    /// Analytic shelving spectrum of the chain.
    Scan(RunArgs),
    /// Sideband-ratio thermometry round trip.
    Probe(RunArgs),
    /// Coherence-time prediction and spin-echo simulation.
    Coherence(RunArgs),
    /// Allan deviation of a recorded time series.
    Allan(RunArgs),
    /// Absorption bound for scattered repump photons.
    Scatter(RunArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendFlag {
    Mc,
    Rate,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `engine.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendFlag>,
    /// Worker threads. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    tool: String,
    version: String,
    command: Command,
    config: RunConfig,
    seed: u64,
    backend: BackendKind,
    threads: Option<usize>,
    wall_time_s: f64,
    outputs: Vec<String>,
}

fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::config("syntax", "", e.to_string()))?;
    // Re-parse the embedded config on its own so its errors carry config paths.
    let config = config::parse(&value.get("config").map(|c| c.to_string()).unwrap_or_default())?;
    let mut m: Manifest = serde_json::from_value(value).map_err(|e| CliError::config("invalid_manifest", "", e.to_string()))?;
    m.config = config;
    Ok(m)
}

fn execute(cmd: Command, cfg: RunConfig, threads: Option<usize>) -> Result<Vec<String>, CliError> {
    commands::validate(&cfg, cmd)?;
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::config("invalid_value", "--threads", "must be >= 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::config("invalid_value", "--threads", e.to_string()))?;
    let artifacts = pool.install(|| commands::run(&cfg, cmd))?;
    let dir = cfg.output.directory.clone();
    let mut outputs = commands::write(&dir, &artifacts, &cfg.output.formats)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd,
        seed: cfg.engine.master_seed,
        backend: cfg.engine.backend,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
        config: cfg,
    };
    commands::write_json(&dir.join("manifest.json"), &manifest)?;
    outputs.push("manifest.json".into());
    Ok(outputs.into_iter().map(|f| dir.join(f).display().to_string()).collect())
}

fn dispatch(action: Action) -> Result<Vec<String>, CliError> {
    let (cmd, args) = match action {
        Action::Replay(r) => {
            let mut m = load_manifest(&r.manifest)?;
            if let Some(out) = r.out {
                m.config.output.directory = out;
            }
            return execute(m.command, m.config, r.threads);
        }
        Action::Modes(a) => (Command::Modes, a),
        Action::Cool(a) => (Command::Cool, a),
        Action::Suppress(a) => (Command::Suppress, a),
        Action::Sweep(a) => (Command::Sweep, a),
        Action::Scan(a) => (Command::Scan, a),
        Action::Probe(a) => (Command::Probe, a),
        Action::Coherence(a) => (Command::Coherence, a),
        Action::Allan(a) => (Command::Allan, a),
        Action::Scatter(a) => (Command::Scatter, a),
    };
    let mut cfg = config::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.engine.master_seed = seed;
    }
    if let Some(b) = args.backend {
        cfg.engine.backend = match b {
            BackendFlag::Mc => BackendKind::MonteCarlo,
            BackendFlag::Rate => BackendKind::Rate,
        };
    }
    if let Some(out) = args.out {
        cfg.output.directory = out;
    }
    execute(cmd, cfg, args.threads)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.action) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = serde_json::json!({ "error": e });
            eprintln!("{body}");
            ExitCode::from(e.exit_code as u8)
        }
    }
}
