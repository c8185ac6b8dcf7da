//! Subcommand definitions and execution.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use masknet::sim::{compare_backends, generate_random_scenario, run_scenario, Scenario};
use masknet::Backend;

use crate::format::{parse_scenario, render_scenario};
use crate::oracle::{check_scenario, render_oracle_report};
use crate::output::render_metrics_output;

#[derive(Debug, Parser)]
#[command(name = "masknet", version, about = "Deterministic ad-hoc network simulator with trained route caches")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file and emit its metrics
    Run {
        /// Scenario file path
        scenario: PathBuf,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's discovery backend (link_state or flood)
        #[arg(long, value_parser = Backend::from_str)]
        backend: Option<Backend>,
        /// Override the scenario's RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Treat unknown scenario keys and sections as errors
        #[arg(long)]
        strict: bool,
    },
    /// Generate a random scenario file
    Generate {
        /// Node count
        #[arg(long)]
        nodes: u32,
        /// Probability of each possible edge
        #[arg(long, default_value_t = 0.3)]
        edge_prob: f64,
        /// Number of transfers
        #[arg(long)]
        transfers: u64,
        /// Number of node removals to interleave
        #[arg(long, default_value_t = 0)]
        churn: u64,
        /// RNG seed
        #[arg(long)]
        seed: u64,
        /// Write the scenario here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario under both backends and emit both metric sets
    Compare {
        /// Scenario file path
        scenario: PathBuf,
        /// Write output here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Treat unknown scenario keys and sections as errors
        #[arg(long)]
        strict: bool,
    },
    /// Check a churn-free scenario against a shortest-path referee
    OracleCheck {
        /// Scenario file path
        scenario: PathBuf,
        /// Override the scenario's discovery backend (link_state or flood)
        #[arg(long, value_parser = Backend::from_str)]
        backend: Option<Backend>,
        /// Override the scenario's RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Treat unknown scenario keys and sections as errors
        #[arg(long)]
        strict: bool,
    },
}

fn load_scenario(
    path: &Path,
    strict: bool,
    backend: Option<Backend>,
    seed: Option<u64>,
) -> Result<Scenario, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let (mut scenario, warnings) =
        parse_scenario(&text, strict).map_err(|e| format!("{}: {e}", path.display()))?;
    for warning in warnings {
        eprintln!("warning: {}: {warning}", path.display());
    }
    if let Some(backend) = backend {
        scenario.backend = backend;
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

/// Writes to `out` if given, else to stdout. The text is fully rendered
/// before anything is written, so a failed run leaves no partial file.
fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
    }
}

/// Runs one subcommand, returning the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match run_command(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    }
}

fn run_command(command: Command) -> Result<i32, String> {
    match command {
        Command::Run { scenario, out, backend, seed, strict } => {
            let scenario = load_scenario(&scenario, strict, backend, seed)?;
            let run = run_scenario(&scenario).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &render_metrics_output(&[run]))?;
            Ok(0)
        }
        Command::Generate { nodes, edge_prob, transfers, churn, seed, out } => {
            let scenario = generate_random_scenario(nodes, edge_prob, transfers, churn, seed)
                .map_err(|e| e.to_string())?;
            emit(out.as_deref(), &render_scenario(&scenario))?;
            Ok(0)
        }
        Command::Compare { scenario, out, seed, strict } => {
            let scenario = load_scenario(&scenario, strict, None, seed)?;
            let cmp = compare_backends(&scenario).map_err(|e| e.to_string())?;
            emit(out.as_deref(), &render_metrics_output(&[cmp.link_state, cmp.flood]))?;
            Ok(0)
        }
        Command::OracleCheck { scenario, backend, seed, strict } => {
            let scenario = load_scenario(&scenario, strict, backend, seed)?;
            let report = check_scenario(&scenario).map_err(|e| e.to_string())?;
            emit(None, &render_oracle_report(&report))?;
            Ok(if report.gate_failed() { 1 } else { 0 })
        }
    }
}
