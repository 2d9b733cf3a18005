//! Configuration-driven experiment runner.
//!
//! Exit codes: 0 success, 1 suite failure, 2 configuration/validation error,
//! 3 numerical failure (the failing operation is named on stderr).

mod artifacts;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::artifacts::write_artifacts;
use crate::config::{build_problem, default_config_toml, load_config};

#[derive(Parser)]
#[command(
    name = "phaseflow",
    about = "Sharp-interface two-phase flow toolkit: equilibria, stability, reduced simulators",
    version
)]
struct Cli {
    /// Configuration file (TOML); the built-in reference configuration is
    /// used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Dotted-path overrides, e.g. --set geometry.r_star=0.8 (repeatable).
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,

    /// Output directory (overrides the config's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for the mode sweeps (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the constitutive assumptions on a temperature grid.
    ValidateMaterials,
    /// Construct the equilibrium state and its conserved totals.
    Equilibrium,
    /// Probe the constrained second variation and classify definiteness.
    Variations,
    /// Dispersion samples, roots, direct spectra, kernel and semi-simplicity.
    Spectrum,
    /// Run the radial two-phase heat relaxation.
    SimulateRadial,
    /// Run the multi-droplet coarsening reduction.
    SimulateRipening,
    /// Run the full verification suite (exit 1 if any criterion fails).
    Suite,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let config_text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) => {
                eprintln!("error: reading {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => default_config_toml().to_string(),
    };

    let (config, canonical) = match load_config(&config_text, &cli.overrides) {
        Ok(pair) => pair,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };

    let problem = match build_problem(&config) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: building the problem: {e:#}");
            return ExitCode::from(2);
        }
    };

    let (label, artifacts) = match &cli.command {
        Command::ValidateMaterials => (
            "validate-materials",
            run::artifacts_validate(&config, &problem),
        ),
        Command::Equilibrium => ("equilibrium", run::artifacts_equilibrium(&problem)),
        Command::Variations => ("variations", run::artifacts_variations(&config, &problem)),
        Command::Spectrum => ("spectrum", run::artifacts_spectrum(&config, &problem)),
        Command::SimulateRadial => ("simulate-radial", run::artifacts_radial(&config, &problem)),
        Command::SimulateRipening => (
            "simulate-ripening",
            run::artifacts_ripening(&config, &problem),
        ),
        Command::Suite => ("suite", run::artifacts_suite(&config, &problem)),
    };

    let artifacts = match artifacts {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {label}: {e:#}");
            return ExitCode::from(3);
        }
    };

    let out_dir = cli
        .out
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    if let Err(e) = write_artifacts(&out_dir, &canonical, &artifacts) {
        eprintln!("error: writing artifacts: {e:#}");
        return ExitCode::from(3);
    }
    for a in &artifacts {
        println!("wrote {}", out_dir.join(&a.name).display());
    }
    println!("wrote {}", out_dir.join("manifest.json").display());

    // the suite's verdict decides the exit code
    if matches!(cli.command, Command::Suite) {
        if let Some(report) = artifacts.iter().find(|a| a.name == "suite_report.json") {
            let parsed: serde_json::Value =
                serde_json::from_slice(&report.bytes).expect("suite report is valid JSON");
            let table = artifacts
                .iter()
                .find(|a| a.name == "suite.txt")
                .map(|a| String::from_utf8_lossy(&a.bytes).to_string())
                .unwrap_or_default();
            print!("{table}");
            if parsed["all_pass"] != serde_json::Value::Bool(true) {
                return ExitCode::from(1);
            }
        }
    }
    ExitCode::SUCCESS
}
