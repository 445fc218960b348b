//! `minmove` scenario runner.
//!
//! Exit status: 0 when every check passes, 1 when a check fails or a pipeline
//! breaks down, 2 for configuration and precondition errors.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::pipeline::{Artifacts, CliError, Verdict};

#[derive(Parser)]
#[command(name = "minmove", version, about = "Gradient-constrained minimizing movements and barrier checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for mesh jitter; without it the mesh is unperturbed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario and run the requested checks.
    Run { config: PathBuf },
    /// Check uniform convexity of the domain and export its mesh.
    CheckDomain { config: PathBuf },
    /// Certify bounded slopes of the data at `checks.x_o`.
    CertifyBsc { config: PathBuf },
    /// Build and verify the barrier at `checks.x_o`, with trace tables.
    Barrier { config: PathBuf },
}

fn execute(cli: &Cli) -> Result<Vec<Verdict>, CliError> {
    let (name, path) = match &cli.command {
        Command::Run { config } => ("run", config),
        Command::CheckDomain { config } => ("check-domain", config),
        Command::CertifyBsc { config } => ("certify-bsc", config),
        Command::Barrier { config } => ("barrier", config),
    };
    let scenario = config::load(path)?;
    let mut out = Artifacts::new(&cli.out)?;
    let verdicts = match &cli.command {
        Command::Run { .. } => pipeline::run_cmd(&scenario, cli.seed, &mut out)?,
        Command::CheckDomain { .. } => pipeline::check_domain_cmd(&scenario, cli.seed, &mut out)?,
        Command::CertifyBsc { .. } => pipeline::certify_cmd(&scenario, &mut out)?,
        Command::Barrier { .. } => pipeline::barrier_cmd(&scenario, &mut out)?,
    };
    out.finish(name, &scenario, cli.seed, &verdicts)?;
    Ok(verdicts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(verdicts) => {
            if !cli.quiet {
                for v in &verdicts {
                    let verdict = if v.pass { "PASS" } else { "FAIL" };
                    if v.tolerance.is_nan() {
                        println!("{verdict} {}: {:e} (report only)", v.check, v.value);
                    } else {
                        println!("{verdict} {}: {:e} (threshold {:e})", v.check, v.value, v.tolerance);
                    }
                }
                println!("artifacts in {}", cli.out.display());
            }
            if verdicts.iter().all(|v| v.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
