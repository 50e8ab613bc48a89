//! `amisim`: batch front end for the Aggregator simulator.
//!
//! Exit status: 0 success, 1 domain failure (audit violation, unknown meter or
//! aggregator), 2 usage or I/O error.

mod artifacts;
mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

#[derive(Parser)]
#[command(name = "amisim", version, about = "Aggregator-based AMI simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts to a directory.
    Simulate {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: std::path::PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
        /// Also write every kernel event to `events.log`.
        #[arg(long)]
        event_log: bool,
    },
    /// Check a report log for anything that identifies a meter.
    Audit {
        #[arg(long)]
        log: std::path::PathBuf,
        /// Scenario whose serials to look for; defaults to `scenario.scn`
        /// next to the log.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Data-reduction summary for a finished run.
    Stats {
        #[arg(long)]
        run: std::path::PathBuf,
        /// Compare encoded record bytes instead of scalar values.
        #[arg(long)]
        bytes: bool,
    },
    /// Pass-thru read or connection command against a run, replayed from its scenario.
    Passthru {
        #[arg(long)]
        run: std::path::PathBuf,
        #[arg(long, value_enum)]
        op: PassthruOp,
        #[arg(long)]
        aggregator: String,
        #[arg(long)]
        serial: String,
        /// Simulated second at which to issue the request; defaults to mid-run.
        #[arg(long)]
        at: Option<u64>,
    },
    /// How many distinct load vectors reproduce a report.
    Ambiguity {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Aggregator whose last report to test; defaults to the first one.
        #[arg(long)]
        aggregator: Option<String>,
    },
    /// Print a scenario in canonical `.scn` form.
    ShowScenario {
        #[arg(long)]
        scenario: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PassthruOp {
    Read,
    Connect,
    Disconnect,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            out,
            seed_override,
            event_log,
        } => commands::simulate(&scenario, &out, seed_override, event_log),
        Command::Audit { log, scenario } => commands::audit(&log, scenario.as_deref()),
        Command::Stats { run, bytes } => commands::stats(&run, bytes),
        Command::Passthru {
            run,
            op,
            aggregator,
            serial,
            at,
        } => commands::passthru(&run, op, &aggregator, &serial, at),
        Command::Ambiguity {
            scenario,
            trials,
            seed,
            aggregator,
        } => commands::ambiguity(&scenario, trials, seed, aggregator.as_deref()),
        Command::ShowScenario { scenario } => commands::show_scenario(&scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e {
                CliError::Domain(_) => ExitCode::from(1),
                CliError::Usage(_) => ExitCode::from(2),
            }
        }
    }
}
