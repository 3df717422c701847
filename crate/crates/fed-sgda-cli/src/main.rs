//! `fed-sgda`: command-line front end of the experiment harness.
//!
//! Exit codes: 0 success; 1 runtime failure (including failed verification
//! checks); 2 usage or configuration errors (unknown flags, missing or
//! invalid config files, unknown preset names).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fed_sgda_cli::config::{self, ExperimentConfig};
use fed_sgda_cli::experiment::{self, RunSummary};
use fed_sgda_cli::presets;

#[derive(Parser)]
#[command(
    name = "fed-sgda",
    version,
    about = "Deterministic simulator for communication-efficient federated minimax optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (every seed of the config) and write CSV output
    Run {
        /// Path to a `key = value` config file
        config: PathBuf,
    },
    /// Run the Cartesian grid over clients-per-round, local steps, and
    /// estimator declared by the config's `sweep.*` keys
    Sweep {
        /// Path to a `key = value` config file with optional `sweep.*` axes
        config: PathBuf,
    },
    /// Run the oracle self-verification suite on the config's instance
    Verify {
        /// Path to a `key = value` config file
        config: PathBuf,
        /// Inject a deliberate gradient perturbation; the suite must then
        /// report a failure (exercises the failure path end to end)
        #[arg(long)]
        canary: bool,
    },
    /// Generate the config's datasets and export them as text files
    GenData {
        /// Path to a `key = value` config file (must set `output`)
        config: PathBuf,
    },
    /// List the named hyperparameter presets, or print one as a config file
    Presets {
        /// Preset name, e.g. `synthetic-s5-k5-storm`; omit to list all
        name: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Sweep { config } => cmd_sweep(&config),
        Command::Verify { config, canary } => cmd_verify(&config, canary),
        Command::GenData { config } => cmd_gen_data(&config),
        Command::Presets { name } => cmd_presets(name.as_deref()),
    };
    ExitCode::from(code)
}

fn config_error(err: anyhow::Error) -> u8 {
    eprintln!("configuration error: {err:#}");
    2
}

fn runtime_error(err: anyhow::Error) -> u8 {
    eprintln!("error: {err:#}");
    1
}

fn load_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))
}

fn cmd_run(path: &Path) -> u8 {
    let cfg = match load_text(path).and_then(|text| config::parse_experiment(&text)) {
        Ok(cfg) => cfg,
        Err(err) => return config_error(err),
    };
    match experiment::run_experiment(&cfg) {
        Ok(summary) => {
            print_summary(&cfg, &summary);
            0
        }
        Err(err) => runtime_error(err),
    }
}

fn cmd_sweep(path: &Path) -> u8 {
    let (cfg, grid) = match load_text(path).and_then(|text| config::parse_sweep(&text)) {
        Ok(parsed) => parsed,
        Err(err) => return config_error(err),
    };
    match experiment::sweep(&cfg, &grid) {
        Ok(cells) => {
            for cell in &cells {
                println!(
                    "cell {}: final mean |grad Phi|^2 = {}",
                    cell.name, cell.summary.final_grad_phi_mean
                );
            }
            if let Some(dir) = &cfg.output {
                println!("wrote {}", dir.join("sweep-summary.csv").display());
            }
            0
        }
        Err(err) => runtime_error(err),
    }
}

fn cmd_verify(path: &Path, canary: bool) -> u8 {
    let cfg = match load_text(path).and_then(|text| config::parse_experiment(&text)) {
        Ok(cfg) => cfg,
        Err(err) => return config_error(err),
    };
    let report = match experiment::verify(&cfg, canary) {
        Ok(report) => report,
        Err(err) => return runtime_error(err),
    };
    let mut failures = 0usize;
    for check in &report {
        let status = if check.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {}: residual {:e} (tolerance {:e})",
            check.name, check.residual, check.tolerance
        );
        if !check.pass {
            failures += 1;
        }
    }
    if failures == 0 {
        println!("all {} checks passed", report.len());
        0
    } else {
        eprintln!("verification failed: {failures} of {} checks", report.len());
        1
    }
}

fn cmd_gen_data(path: &Path) -> u8 {
    let cfg = match load_text(path).and_then(|text| config::parse_experiment(&text)) {
        Ok(cfg) => cfg,
        Err(err) => return config_error(err),
    };
    if cfg.output.is_none() {
        return config_error(anyhow::anyhow!(
            "dataset export needs an `output` directory in the config"
        ));
    }
    match experiment::generate_data(&cfg) {
        Ok(written) => {
            for file in &written {
                println!("wrote {}", file.display());
            }
            0
        }
        Err(err) => runtime_error(err),
    }
}

fn cmd_presets(name: Option<&str>) -> u8 {
    match name {
        None => {
            for preset in presets::all() {
                println!("{:<28} {}", preset.name, preset.summary);
            }
            0
        }
        Some(name) => match presets::find(name) {
            Some(preset) => {
                print!(
                    "# {}: {}\n{}",
                    preset.name,
                    preset.summary,
                    config::canonical_text(&preset.config, None)
                );
                0
            }
            None => {
                eprintln!("unknown preset `{name}`; run `fed-sgda presets` for the list");
                2
            }
        },
    }
}

fn print_summary(cfg: &ExperimentConfig, summary: &RunSummary) {
    let family = match &cfg.run.problem {
        fed_sgda::ProblemConfig::Synthetic(_) => "synthetic",
        fed_sgda::ProblemConfig::Auc(_) => "auc",
    };
    println!(
        "ran {} rounds x {} seed(s) ({family}, estimator {})",
        cfg.run.rounds,
        cfg.seeds.len(),
        cfg.run.estimator.name()
    );
    println!("final mean |grad Phi|^2 = {}", summary.final_grad_phi_mean);
    if let Some(c0) = summary.c0_mean {
        println!("mean initial gap C0 = {c0}");
    }
    if let Some(series) = &summary.mean_test_auc {
        if let Some(last) = series.last() {
            println!("final mean test AUC = {last}");
        }
    }
    if let Some(dir) = &cfg.output {
        println!("wrote {}", dir.display());
    }
}
