use std::fmt;
use std::fs;
use std::path::Path;

use ami_core::grid::GridError;
use ami_core::privacy::{reconstruction_ambiguity, reduction_bytes, reduction_factor, AMBIGUITY_CSV_HEADER};
use ami_core::{AggregatorError, ConnectionCommand, GridSimulation, Scenario};
use anyhow::{anyhow, Context};

use crate::artifacts::{self, load_scenario};
use crate::PassthruOp;

#[derive(Debug)]
pub enum CliError {
    Domain(anyhow::Error),
    Usage(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(e) | CliError::Usage(e) => write!(f, "{e:#}"),
        }
    }
}

type CliResult = Result<(), CliError>;

trait Classify<T> {
    fn usage(self) -> Result<T, CliError>;
    fn domain(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Usage(e.into()))
    }

    fn domain(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Domain(e.into()))
    }
}

fn run_scenario(scenario: &Scenario, event_log: bool) -> Result<GridSimulation, CliError> {
    let mut sim = if event_log {
        GridSimulation::with_event_log(scenario)
    } else {
        GridSimulation::new(scenario)
    }
    .usage()?;
    sim.run().domain()?;
    Ok(sim)
}

pub fn simulate(scenario: &str, out: &Path, seed_override: Option<u64>, event_log: bool) -> CliResult {
    let mut scenario = load_scenario(scenario).usage()?;
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    let sim = run_scenario(&scenario, event_log)?;
    let summary = sim.summary();
    let audit = artifacts::audit_lines(sim.report_log(), Some(&scenario)).domain()?;
    artifacts::write_run(out, &sim, &summary, &audit).usage()?;

    println!(
        "{} meters, {} aggregators, {} reports, grid total {:.1} W",
        summary.meters, summary.aggregators, summary.reports, summary.grid_total_load_w
    );
    if let Some(last) = sim.first_profile().and_then(|p| p.last()) {
        println!("house {} voltage {:.4} V", last.house_index, last.voltage_v);
    }
    print!("{}", summary.digest_text());
    let failed = audit.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Domain(anyhow!("{failed} reports failed the privacy audit")));
    }
    Ok(())
}

pub fn audit(log: &Path, scenario: Option<&str>) -> CliResult {
    let text = fs::read_to_string(log)
        .with_context(|| format!("reading {}", log.display()))
        .usage()?;
    let scenario = match scenario {
        Some(s) => Some(load_scenario(s).usage()?),
        None => {
            let sibling = log.with_file_name(artifacts::SCENARIO);
            if sibling.exists() {
                Some(load_scenario(&sibling.to_string_lossy()).usage()?)
            } else {
                eprintln!("note: no scenario found; checking report structure only");
                None
            }
        }
    };
    let lines: Vec<String> = text.lines().filter(|l| !l.trim().is_empty()).map(String::from).collect();
    let results = artifacts::audit_lines(&lines, scenario.as_ref()).domain()?;
    print!("{}", artifacts::audit_csv(&results));
    let mut failed = 0;
    for (i, r) in results.iter().enumerate().filter(|(_, r)| !r.passed) {
        failed += 1;
        for v in &r.violations {
            eprintln!("line {}: {:?} in field {}", i + 1, v.kind, v.field);
        }
    }
    if failed > 0 {
        return Err(CliError::Domain(anyhow!("{failed} of {} reports failed", results.len())));
    }
    Ok(())
}

pub fn stats(run: &Path, bytes: bool) -> CliResult {
    let manifest = artifacts::read_manifest(run).usage()?;
    let get = |key: &str| -> Result<u64, CliError> {
        manifest
            .get(key)
            .ok_or_else(|| anyhow!("manifest missing {key}"))
            .and_then(|v| v.parse().with_context(|| format!("manifest {key}")))
            .usage()
    };
    let stats = if bytes {
        reduction_bytes(get("raw_bytes")?, get("report_bytes")?)
    } else {
        reduction_factor(get("raw_readings")?, get("reports")?)
    }
    .domain()?;
    let unit = if bytes { "bytes" } else { "values" };
    println!("raw_{unit}={}", stats.raw_values_count);
    println!("report_{unit}={}", stats.report_values_count);
    println!("reduction_factor={}", stats.reduction_factor);
    println!("max_exposure_s={}", get("max_exposure_s")?);
    Ok(())
}

fn grid_domain(e: GridError) -> CliError {
    CliError::Domain(e.into())
}

pub fn passthru(run: &Path, op: PassthruOp, aggregator: &str, serial: &str, at: Option<u64>) -> CliResult {
    let scenario_path = run.join(artifacts::SCENARIO);
    if !scenario_path.exists() {
        return Err(CliError::Usage(anyhow!("no run artifacts in {}", run.display())));
    }
    let scenario = load_scenario(&scenario_path.to_string_lossy()).usage()?;
    let at = at.unwrap_or(scenario.duration_s / 2);
    let mut sim = GridSimulation::new(&scenario).usage()?;
    sim.run_until(at).map_err(grid_domain)?;

    let command = match op {
        PassthruOp::Read => {
            let reading = sim.poll_meter(aggregator, serial).map_err(grid_domain)?;
            println!("{}", reading.to_record());
            return Ok(());
        }
        PassthruOp::Connect => ConnectionCommand::Connect,
        PassthruOp::Disconnect => ConnectionCommand::Disconnect,
    };
    let before = sim.grid_state().grid_total_load_w;
    let ack = sim.command_connection(aggregator, serial, command).map_err(grid_domain)?;
    println!("serial={} service_state={} at_s={}", ack.serial, ack.service_state.as_str(), sim.now());
    sim.run().map_err(grid_domain)?;

    let baseline = run_scenario(&scenario, false)?;
    println!("grid_total_before_w={before}");
    println!("grid_total_baseline_end_w={}", baseline.grid_state().grid_total_load_w);
    println!("grid_total_after_w={}", sim.grid_state().grid_total_load_w);
    Ok(())
}

pub fn ambiguity(scenario: &str, trials: usize, seed: u64, aggregator: Option<&str>) -> CliResult {
    let scenario = load_scenario(scenario).usage()?;
    let ids = scenario.aggregator_ids();
    let id = aggregator.unwrap_or(&ids[0]);
    let feeder = scenario
        .feeders
        .iter()
        .find(|f| f.assignments.iter().any(|a| a.aggregator == id))
        .ok_or_else(|| CliError::Domain(GridError::UnknownAggregator(id.to_string()).into()))?;
    let sim = run_scenario(&scenario, false)?;
    let report = sim
        .reports()
        .into_iter()
        .rev()
        .find(|r| r.aggregator_id == id)
        .ok_or_else(|| CliError::Domain(AggregatorError::NoData.into()))?;
    let result = reconstruction_ambiguity(&report, &feeder.topology(), trials, seed).domain()?;
    println!("{AMBIGUITY_CSV_HEADER}");
    println!("{}", result.to_csv_line());
    if result.low_dimension {
        eprintln!("note: {} meters is too few for the report to hide individual loads", report.meter_count);
    }
    Ok(())
}

pub fn show_scenario(scenario: &str) -> CliResult {
    print!("{}", load_scenario(scenario).usage()?.to_text());
    Ok(())
}
