mod commands;
mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ScenarioConfig, SCHEMA_VERSION};
use crate::error::CliError;
use crate::run::{config_hash, Manifest, Run};

#[derive(Parser)]
#[command(name = "readout", version, about = "Wavepackets, sweeps, cooperativity, photon statistics and fits")]
struct Cli {
    /// JSON scenario config; built-in defaults are used without one.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// p_c(t) curves, one CSV per configured run.
    Wavepacket,
    /// P_c against read intensity, one CSV per detuning.
    SweepIntensity,
    /// P_c against detuning, one CSV per intensity.
    SweepDetuning,
    /// Cooperativity from the closed form, quadrature and Monte Carlo.
    Chi,
    /// Weighted least-squares fit of the model parameters.
    Fit,
    /// Correlation summary and conditional wavepacket from a detection log.
    Stats,
    /// Synthetic detection log from the model.
    Synth,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Wavepacket => "wavepacket",
            Command::SweepIntensity => "sweep-intensity",
            Command::SweepDetuning => "sweep-detuning",
            Command::Chi => "chi",
            Command::Fit => "fit",
            Command::Stats => "stats",
            Command::Synth => "synth",
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn load(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            ..ScenarioConfig::default()
        },
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn dispatch(command: Command, cfg: &ScenarioConfig, run: &mut Run) -> Result<(), CliError> {
    match command {
        Command::Wavepacket => commands::wavepacket(cfg, run),
        Command::SweepIntensity => commands::sweep_intensity(cfg, run),
        Command::SweepDetuning => commands::sweep_detuning(cfg, run),
        Command::Chi => commands::chi(cfg, run),
        Command::Fit => commands::fit_cmd(cfg, run),
        Command::Stats => commands::stats(cfg, run),
        Command::Synth => commands::synth(cfg, run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = now();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.to_exit();
        }
    };
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(1);
    }
    let base_dir = cli
        .config
        .as_ref()
        .and_then(|p| p.parent().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let seed = cfg.seed.unwrap_or(0);
    let mut run = Run::new(out_dir.clone(), base_dir, cli.quiet, seed);

    let outcome = dispatch(cli.command, &cfg, &mut run);
    if outcome.is_err() {
        run.discard_outputs();
    }
    let manifest = Manifest {
        tool: "readout",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name().to_string(),
        config_sha256: config_hash(&cfg),
        seed,
        started_utc: started,
        finished_utc: now(),
        status: if outcome.is_ok() { "ok" } else { "failed" },
        exit_code: outcome.as_ref().err().map_or(0, CliError::exit_code),
        error: outcome.as_ref().err().map(|e| e.to_string()),
        outputs: run.outputs().to_vec(),
    };
    let manifest_path = out_dir.join(format!("manifest_{}.json", cli.command.name()));
    let written = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| e.to_string())
        .and_then(|mut b| {
            b.push(b'\n');
            std::fs::write(&manifest_path, b).map_err(|e| e.to_string())
        });
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", manifest_path.display());
        if outcome.is_ok() {
            return ExitCode::from(1);
        }
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.to_exit()
        }
    }
}
