use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use spares_cli::{
    cmd_analyze, cmd_optimize, cmd_simulate, cmd_validate, CliError, OutputFormat, Overrides,
    Scenario,
};

/// Spare strategy analysis for satellite constellations.
#[derive(Parser)]
#[command(name = "spares", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytic stock-level distributions.
    Analyze(CommonArgs),
    /// Run the Monte Carlo simulator.
    Simulate(CommonArgs),
    /// Compare analysis against simulation.
    Validate(CommonArgs),
    /// Search (r, q) for the cheapest feasible design.
    Optimize(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the simulation and GA seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    format: OutputFormat,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, args) = match &cli.command {
        Command::Analyze(a) => ("analyze", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Validate(a) => ("validate", a),
        Command::Optimize(a) => ("optimize", a),
    };
    let scenario = Scenario::load(&args.scenario)?;
    let overrides = Overrides { seed: args.seed };
    let start = Instant::now();
    let bundle = match cli.command {
        Command::Analyze(_) => cmd_analyze(&scenario)?,
        Command::Simulate(_) => cmd_simulate(&scenario, overrides)?,
        Command::Validate(_) => cmd_validate(&scenario, overrides)?,
        Command::Optimize(_) => cmd_optimize(&scenario, overrides)?,
    };
    let elapsed = start.elapsed();
    let files = bundle.write(&args.out, args.format)?;
    eprintln!(
        "{name}: {:.3} s, wrote {} file(s) to {}",
        elapsed.as_secs_f64(),
        files.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
