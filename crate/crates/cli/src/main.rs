//! `trustavg`: validate scenarios, run simulations, and sweep seeds.
//!
//! Exit code 0 on success; nonzero on parse or semantic errors.
//! `validate` exits nonzero only for hard structural errors — assumption
//! violations are reported in the output and keep exit code 0.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use trustavg_cli::{emit_outputs, parse_scenario, reseed, run_sweep, OutputFormat};
use trustavg_core::{run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "trustavg", version, about = "Trustworthy distributed averaging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario and print its assumption report.
    Validate(CommonArgs),
    /// Run a scenario and emit the trace table and summary.
    Run(RunArgs),
    /// Re-run a scenario over a seed range and aggregate detection stats.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Override every seed in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of rounds.
    #[arg(long)]
    max_rounds: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Which files to write.
    #[arg(long, default_value = "both")]
    format: OutputFormat,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// First seed of the sweep.
    #[arg(long, default_value_t = 0)]
    seed_start: u64,
    /// Number of seeds to run.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Write the aggregate as JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(common: &CommonArgs) -> Result<Scenario> {
    let text = fs::read_to_string(&common.scenario)
        .with_context(|| format!("cannot read {}", common.scenario.display()))?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(seed) = common.seed {
        reseed(&mut scenario, seed);
    }
    if let Some(rounds) = common.max_rounds {
        scenario.max_rounds = rounds;
    }
    Ok(scenario)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(common) => {
            let scenario = load(&common)?;
            let report = scenario.validate()?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if report.is_clean() {
                eprintln!("scenario ok: no assumption violations");
            } else {
                eprintln!(
                    "scenario ok: {} assumption violation(s) reported",
                    report.violations.len()
                );
            }
        }
        Command::Run(args) => {
            let scenario = load(&args.common)?;
            let trace = run_scenario(&scenario)?;
            let written = emit_outputs(&trace, &args.out, args.format)?;
            for path in &written {
                eprintln!("wrote {}", path.display());
            }
            let s = &trace.summary;
            eprintln!(
                "target {:.6}, converged: {}, rounds_to_tolerance: {:?}",
                s.target_used, s.converged, s.rounds_to_tolerance
            );
        }
        Command::Sweep(args) => {
            let scenario = load(&args.common)?;
            let outcome = run_sweep(&scenario, args.seed_start, args.seeds)?;
            let json = serde_json::to_string_pretty(&outcome)?;
            match args.out {
                Some(path) => {
                    fs::write(&path, format!("{json}\n"))
                        .with_context(|| format!("cannot write {}", path.display()))?;
                    eprintln!("wrote {}", path.display());
                }
                None => println!("{json}"),
            }
        }
    }
    Ok(())
}
