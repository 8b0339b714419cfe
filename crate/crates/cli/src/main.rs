//! `lab`: run, validate and list the convergence-rate experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use robinlab::rates::{list_experiments, run_config_file, LabConfig};

#[derive(Debug, Parser)]
#[command(name = "lab", version, about = "Convergence-rate experiments for reaction–diffusion attractors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its reports.
    Run { config: PathBuf },
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
    /// List the available experiments.
    ListExperiments,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run { config } => {
            let (outcome, dir) = run_config_file(&config)
                .with_context(|| format!("running {}", config.display()))?;
            println!("experiment: {}", outcome.kind.name());
            if let Some(fit) = &outcome.fit {
                println!(
                    "fit ({:?}): exponent {:.4}, r2 {:.5}, ratio range [{:.4e}, {:.4e}]",
                    fit.mode, fit.exponent, fit.r_squared, fit.ratio_min, fit.ratio_max
                );
            }
            for c in &outcome.checks {
                let tag = match c.criterion {
                    Some(k) => format!("criterion {k}"),
                    None => "invariant".to_string(),
                };
                println!(
                    "{} [{tag}{}] {}: {:.6e} (want {})",
                    if c.passed { "PASS" } else { "FAIL" },
                    if c.hard { ", hard" } else { "" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            for c in &outcome.certifications {
                println!(
                    "{} [{} certification] {}: change {:.3e} (tolerance {:.3e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.kind,
                    c.quantity,
                    c.change,
                    c.tolerance
                );
            }
            for note in &outcome.notes {
                println!("note: {note}");
            }
            println!("verdict: {}", outcome.verdict());
            println!("reports written to {}", dir.display());
            Ok(if outcome.hard_failure() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Validate { config } => {
            let cfg = LabConfig::load(&config)?;
            cfg.validate()?;
            println!(
                "{}: valid ({} experiment, {} sweep points)",
                config.display(),
                cfg.experiment.name.name(),
                cfg.sweep.values().len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ListExperiments => {
            for (name, description) in list_experiments() {
                println!("{name:<24} {description}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
