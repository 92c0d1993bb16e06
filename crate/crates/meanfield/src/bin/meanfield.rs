//! Command-line runner for scenario presets and custom configurations.
//!
//! Exit codes: 0 success (all scenario assertions passed), 1 assertion
//! failure, 2 unknown scenario, 3 configuration/validation error,
//! 4 numerical error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use meanfield::config::ConfigFile;
use meanfield::scenario::{list_scenarios, run_scenario, RunOptions};
use meanfield::Error;

#[derive(Parser)]
#[command(name = "meanfield", about = "Mean-field solver and network simulator for randomly connected rate networks with delays", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset scenario by name, or a custom TOML configuration by path
    Run {
        /// Preset name (see `list`) or path to a configuration file
        scenario: String,
        /// Output directory for artifacts and the manifest
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seed overriding the scenario default
        #[arg(long)]
        seed: Option<u64>,
        /// Parameter overrides, e.g. --set sigma=0.5 --set n-per-pop=500
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Use figure-scale population sizes instead of desk-scale defaults
        #[arg(long)]
        paper_scale: bool,
    },
    /// List the preset registry
    List,
    /// Validate a configuration file without running it
    Validate {
        /// Path to a TOML configuration
        config: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::UnknownScenario(_) => 2,
        Error::Config(_) | Error::InvalidParams { .. } => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, seed, set, paper_scale } => {
            let mut overrides = Vec::new();
            for kv in &set {
                match kv.split_once('=') {
                    Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
                    None => {
                        eprintln!("error: --set expects KEY=VALUE, got `{kv}`");
                        return ExitCode::from(3);
                    }
                }
            }
            let opts = RunOptions { out_dir: out.clone(), seed, overrides, paper_scale };
            match run_scenario(&scenario, &opts) {
                Ok(manifest) => {
                    println!(
                        "scenario {}: {} ({} artifacts in {})",
                        manifest.scenario,
                        if manifest.passed { "pass" } else { "FAIL" },
                        manifest.files.len(),
                        out.display()
                    );
                    for (key, value) in &manifest.summary {
                        println!("  {key} = {value}");
                    }
                    ExitCode::from(if manifest.passed { 0 } else { 1 })
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::from(exit_code_for(&err))
                }
            }
        }
        Command::List => {
            for info in list_scenarios() {
                println!("{:32} {}  [{}]", info.name, info.description, info.figure);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match ConfigFile::load(&config).and_then(|f| {
            f.to_params()?;
            if f.simulation.is_some() {
                f.to_network_config()?;
            }
            Ok(())
        }) {
            Ok(()) => {
                println!("{}: valid", config.display());
                ExitCode::SUCCESS
            }
            Err(err) => {
                eprintln!("{}: {err}", config.display());
                ExitCode::from(3)
            }
        },
    }
}
