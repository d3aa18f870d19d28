//! Command-line front door for the hybrid key-network simulator.

mod commands;
mod report;
mod scenario;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{CliError, CommandOutput, GlobalOpts, OutputFormat, SweepSpec};
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hybrid-keynet",
    version,
    about = "Simulate and analyze hybrid PQC-QKD key-distribution networks"
)]
struct Cli {
    /// Override the scenario's seed for protocol runs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Also write the output to this path.
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,

    /// Output format; csv applies only to --sweep tables.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Include raw key material in simulate reports.
    #[arg(long, global = true)]
    reveal_secrets: bool,

    /// Rate-vs-distance sweep, e.g. 0..200:10 (km).
    #[arg(long, global = true, value_parser = parse_sweep_arg)]
    sweep: Option<SweepSpec>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn parse_sweep_arg(text: &str) -> Result<SweepSpec, String> {
    commands::parse_sweep(text)
}

#[derive(Subcommand)]
enum Command {
    /// Check a topology document against every invariant.
    Validate { topology: String },
    /// Per-link and end-to-end key rates, crossover distances, sweeps.
    Rate { topology: String, scenario: String },
    /// Run the configured key-distribution protocol.
    Simulate { topology: String, scenario: String },
    /// Minimal access structures, criticality ranking, break probability.
    Analyze { topology: String, scenario: String },
    /// Replay a threat-event stream through the switching policy.
    Switch { topology: String, events: String, config: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = GlobalOpts {
        seed: cli.seed,
        format: match cli.format {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        },
        reveal_secrets: cli.reveal_secrets,
        sweep: cli.sweep,
    };

    let result: Result<CommandOutput, CliError> = match &cli.command {
        Command::Validate { topology } => commands::cmd_validate(topology),
        Command::Rate { topology, scenario } => commands::cmd_rate(topology, scenario, &opts),
        Command::Simulate { topology, scenario } => {
            commands::cmd_simulate(topology, scenario, &opts)
        }
        Command::Analyze { topology, scenario } => {
            commands::cmd_analyze(topology, scenario, &opts)
        }
        Command::Switch { topology, events, config } => {
            commands::cmd_switch(topology, events, config)
        }
    };

    match result {
        Ok(output) => {
            print!("{}", output.stdout);
            eprint!("{}", output.stderr);
            if let Some(path) = &cli.output {
                if let Err(e) = std::fs::File::create(path)
                    .and_then(|mut f| f.write_all(output.stdout.as_bytes()))
                {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(output.code)
        }
        Err(error) => {
            eprintln!("{}", error.message());
            ExitCode::from(error.code())
        }
    }
}
