//! `framewright`: offline tools for session traces and recordings.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use framewright_core::session::{
    compute_metrics, generate, load_recording, load_trace, replay, save_recording, save_trace, MetricsOptions,
    PipelineConfig, Scenario,
};

#[derive(Debug, Parser)]
#[command(name = "framewright", version, about = "Replay, generate and score framewright sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a trace through the pipeline and write the recording.
    Replay {
        trace: PathBuf,
        /// Base config: a TOML file, or a JSON merge patch on the defaults.
        /// The trace's own overrides apply on top.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Recording path; stdout when omitted and --metrics is not given.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the metrics summary as JSON.
        #[arg(long)]
        metrics: bool,
    },
    /// Write the trace for a built-in scenario.
    GenTrace {
        /// lego, stationary, full, five-minute, orbit or truck.
        scenario: Scenario,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trace path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the metrics summary of a recording.
    Metrics { recording: PathBuf },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let base = PipelineConfig::default();
    let Some(path) = path else { return Ok(base) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "toml") {
        return Ok(PipelineConfig::from_toml(&text)?);
    }
    let patch: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(base.patched(&patch)?)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Replay {
            trace,
            config,
            out,
            metrics,
        } => {
            let config = load_config(config.as_deref())?;
            let trace = load_trace(&trace)?;
            let recording = replay(&trace, &config)?;
            match &out {
                Some(path) => save_recording(&recording, path)?,
                None if !metrics => std::io::stdout().lock().write_all(recording.to_jsonl().as_bytes())?,
                None => {}
            }
            if metrics {
                print_json(&recording.metrics)?;
            }
        }
        Command::GenTrace { scenario, seed, out } => {
            let trace = generate(scenario, seed);
            match &out {
                Some(path) => save_trace(&trace, path)?,
                None => std::io::stdout().lock().write_all(trace.to_jsonl().as_bytes())?,
            }
        }
        Command::Metrics { recording } => {
            let recording = load_recording(&recording)?;
            print_json(&compute_metrics(&recording, &MetricsOptions::default())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors exit with 2 through clap.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
