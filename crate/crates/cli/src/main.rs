use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trimul_cli::config::{ExperimentConfig, ExperimentKind, PartialConfig};
use trimul_cli::run::run;
use trimul_cli::{selftest, CliError};

#[derive(Parser)]
#[command(name = "trimul", version, about = "Trilinear multiplier experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    jmax: Option<u32>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Samples per frequency axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Wavelet coefficients of a sampled multiplier.
    Analyze,
    /// Certified partitions of every coefficient block.
    Partition,
    /// Operator-norm lower bounds over a random smooth family.
    BoundSweep,
    /// Growth of the randomised-sign counterexample.
    Necessity,
    /// Partial-sum verdict for the multiplier family in `L^q`.
    Boundary,
    /// Runs the built-in quick checks.
    Selftest,
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let kind = match cli.command {
        Command::Analyze => ExperimentKind::Analyze,
        Command::Partition => ExperimentKind::Partition,
        Command::BoundSweep => ExperimentKind::BoundSweep,
        Command::Necessity => ExperimentKind::Necessity,
        Command::Boundary => ExperimentKind::Boundary,
        Command::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::SelfTest(failed));
            }
            return Ok(());
        }
    };
    let file = match &cli.config {
        Some(p) => PartialConfig::load(p)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        q: cli.q,
        j_max: cli.jmax,
        grid: cli.grid,
        seed: cli.seed,
        trials: cli.trials,
        out: cli.out,
        ..Default::default()
    };
    let cfg = ExperimentConfig::resolve(kind, file.overlay(flags))?;
    let manifest = run(&cfg)?;
    for o in &manifest.outputs {
        println!("{}  {}", o.sha256, cfg.out.join(&o.file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trimul: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
