//! Files a `simulate` run leaves behind, and reading them back.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ami_core::grid::profile_csv;
use ami_core::privacy::{audit_report, AuditResult, AUDIT_CSV_HEADER};
use ami_core::scenario::canonical_scenario_text;
use ami_core::{parse_scenario, GridSimulation, RunSummary, Scenario};
use anyhow::{anyhow, Context, Result};

pub const PROFILE: &str = "profile.csv";
pub const REPORTS: &str = "reports.log";
pub const DIGEST: &str = "digest.txt";
pub const HISTORY: &str = "history.csv";
pub const AUDIT: &str = "audit.csv";
pub const MANIFEST: &str = "manifest.txt";
pub const SCENARIO: &str = "scenario.scn";
pub const EVENTS: &str = "events.log";

/// A path to a `.scn` file, or the name of a bundled scenario.
pub fn load_scenario(spec: &str) -> Result<Scenario> {
    let path = Path::new(spec);
    let text = if path.exists() {
        fs::read_to_string(path).with_context(|| format!("reading {spec}"))?
    } else if let Some(text) = canonical_scenario_text(spec) {
        text.to_string()
    } else {
        return Err(anyhow!("no scenario file or bundled scenario named {spec:?}"));
    };
    parse_scenario(&text).with_context(|| format!("scenario {spec}"))
}

pub fn manifest_text(s: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "meters={}", s.meters);
    let _ = writeln!(out, "aggregators={}", s.aggregators);
    let _ = writeln!(out, "events={}", s.events_processed);
    let _ = writeln!(out, "reading_events={}", s.reading_events);
    let _ = writeln!(out, "raw_readings={}", s.raw_readings);
    let _ = writeln!(out, "raw_bytes={}", s.raw_bytes);
    let _ = writeln!(out, "reports={}", s.reports);
    let _ = writeln!(out, "report_bytes={}", s.report_bytes);
    let _ = writeln!(out, "max_exposure_s={}", s.max_exposure_s);
    let _ = writeln!(out, "grid_total_load_w={}", s.grid_total_load_w);
    out
}

pub fn read_manifest(run: &Path) -> Result<BTreeMap<String, String>> {
    let path = run.join(MANIFEST);
    let text = fs::read_to_string(&path).with_context(|| format!("no run artifacts in {}", run.display()))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

pub fn audit_lines(lines: &[String], scenario: Option<&Scenario>) -> Result<Vec<AuditResult>> {
    let serials = scenario.map(Scenario::serials).unwrap_or_default();
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| audit_report(l, &serials).with_context(|| format!("report line {}", i + 1)))
        .collect()
}

pub fn audit_csv(results: &[AuditResult]) -> String {
    let mut out = format!("{AUDIT_CSV_HEADER}\n");
    for r in results {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Write every artifact of a finished run into `dir`.
pub fn write_run(dir: &Path, sim: &GridSimulation, summary: &RunSummary, audit: &[AuditResult]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, body: String| {
        fs::write(dir.join(name), body).with_context(|| format!("writing {}", dir.join(name).display()))
    };
    write(PROFILE, profile_csv(sim.first_profile().unwrap_or_default()))?;
    let mut reports = String::new();
    for line in sim.report_log() {
        reports.push_str(line);
        reports.push('\n');
    }
    write(REPORTS, reports)?;
    write(DIGEST, summary.digest_text())?;
    write(HISTORY, sim.history().to_csv())?;
    write(AUDIT, audit_csv(audit))?;
    write(MANIFEST, manifest_text(summary))?;
    write(SCENARIO, sim.scenario().to_text())?;
    if let Some(lines) = sim.event_log_lines() {
        let mut events = String::with_capacity(lines.len() * 48);
        for l in lines {
            events.push_str(l);
            events.push('\n');
        }
        write(EVENTS, events)?;
    }
    Ok(())
}
