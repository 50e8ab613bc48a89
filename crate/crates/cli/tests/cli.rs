use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn amisim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amisim")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn simulate(scenario: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--scenario", scenario, "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    amisim(&args)
}

fn flat_run() -> TempDir {
    let dir = TempDir::new().unwrap();
    let out = simulate("fig3_flat", dir.path(), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir
}

fn stat(run: &Path, key: &str, extra: &[&str]) -> f64 {
    let mut args = vec!["stats", "--run", run.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = amisim(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(|v| v.parse().unwrap()))
        .unwrap()
}

#[test]
fn flat_profile_csv() {
    let dir = flat_run();
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("house_index,distance_m,load_w,voltage_v"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    let last_v: f64 = rows[99].split(',').nth(3).unwrap().parse().unwrap();
    assert!((last_v - 225.0).abs() < 0.1, "{last_v}");
}

#[test]
fn reruns_are_byte_identical() {
    let a = flat_run();
    let b = flat_run();
    for name in ["digest.txt", "profile.csv", "reports.log", "history.csv", "audit.csv", "manifest.txt", "scenario.scn"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_override_is_recorded() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&simulate("fig3_random", dir.path(), &["--seed-override", "77"])), 0);
    let scn = fs::read_to_string(dir.path().join("scenario.scn")).unwrap();
    assert!(scn.lines().any(|l| l.replace(' ', "") == "seed=77"), "{scn}");
    let other = TempDir::new().unwrap();
    assert_eq!(code(&simulate("fig3_random", other.path(), &[])), 0);
    assert_ne!(
        fs::read(dir.path().join("digest.txt")).unwrap(),
        fs::read(other.path().join("digest.txt")).unwrap()
    );
}

#[test]
fn event_log_on_request() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&simulate("fig3_flat", dir.path(), &["--event-log"])), 0);
    let events = fs::read_to_string(dir.path().join("events.log")).unwrap();
    assert!(events.starts_with("t=0 seq=0 kind="));
    let digest = fs::read_to_string(dir.path().join("digest.txt")).unwrap();
    assert!(digest.contains(&format!("events={}\n", events.lines().count())));
    assert!(!flat_run().path().join("events.log").exists());
}

#[test]
fn missing_scenario_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = simulate(dir.path().join("nope.scn").to_str().unwrap(), dir.path(), &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope.scn"));
}

#[test]
fn invalid_scenario_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.scn");
    fs::write(&path, "seed = 1\nduration_s = 60\n\n[feeder f]\nhouse_count = 4\nload = fixed 10\nassign = A:1-2, B:2-4\n").unwrap();
    let out = simulate(path.to_str().unwrap(), &dir.path().join("out"), &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("assigned to both"), "{}", stderr(&out));
}

#[test]
fn unwritable_output_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    assert_eq!(code(&simulate("fig3_flat", &file, &[])), 2);
}

#[test]
fn missing_flag_is_usage_error() {
    assert_eq!(code(&amisim(&["simulate", "--scenario", "fig3_flat"])), 2);
}

#[test]
fn audit_clean_log() {
    let dir = flat_run();
    let out = amisim(&["audit", "--log", dir.path().join("reports.log").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), fs::read_to_string(dir.path().join("audit.csv")).unwrap());
}

#[test]
fn audit_injected_serial() {
    let dir = flat_run();
    let log = dir.path().join("reports.log");
    let text = fs::read_to_string(&log).unwrap().replacen("aggregator_id=A1", "aggregator_id=SN-nbhd-0042", 1);
    fs::write(&log, text).unwrap();
    let out = amisim(&["audit", "--log", log.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("900,false,1"), "{}", stdout(&out));
    assert!(stderr(&out).contains("SerialLeak"));
}

#[test]
fn audit_missing_file() {
    let dir = TempDir::new().unwrap();
    let out = amisim(&["audit", "--log", dir.path().join("reports.log").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn stats_reduction() {
    let dir = flat_run();
    let factor = stat(dir.path(), "reduction_factor", &[]);
    assert_eq!(factor, 500.0);
    assert!(stat(dir.path(), "reduction_factor", &["--bytes"]) >= 10.0);
}

#[test]
fn stats_empty_dir() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&amisim(&["stats", "--run", dir.path().to_str().unwrap()])), 2);
}

#[test]
fn stats_sub_unity_toy() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("toy.scn");
    fs::write(
        &path,
        "seed = 3\nduration_s = 60\nsample_interval_s = 60\nreport_interval_s = 60\n\n[feeder solo]\nhouse_count = 1\nload = fixed 1000\nassign = A1:1-1\n",
    )
    .unwrap();
    let run = dir.path().join("run");
    assert_eq!(code(&simulate(path.to_str().unwrap(), &run, &[])), 0);
    assert_eq!(stat(&run, "reduction_factor", &[]), 5.0 / 15.0);
}

fn passthru(run: &Path, op: &str, serial: &str) -> Output {
    amisim(&[
        "passthru",
        "--run",
        run.to_str().unwrap(),
        "--op",
        op,
        "--aggregator",
        "A1",
        "--serial",
        serial,
    ])
}

fn value(out: &Output, key: &str) -> f64 {
    stdout(out)
        .split_whitespace()
        .chain(stdout(out).lines())
        .find_map(|t| t.strip_prefix(&format!("{key}=")).map(|v| v.parse().unwrap()))
        .unwrap()
}

#[test]
fn passthru_read() {
    let dir = flat_run();
    let out = passthru(dir.path(), "read", "SN-nbhd-0017");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).starts_with("serial=SN-nbhd-0017 "));
    // 10 kW for the first half hour.
    assert_eq!(value(&out, "cumulative_wh"), 5000.0);
}

#[test]
fn passthru_disconnect_reduces_total() {
    let dir = flat_run();
    let out = passthru(dir.path(), "disconnect", "SN-nbhd-0017");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let baseline = value(&out, "grid_total_baseline_end_w");
    let after = value(&out, "grid_total_after_w");
    assert_eq!(baseline - after, 10_000.0);
}

#[test]
fn passthru_unknown_serial() {
    let dir = flat_run();
    let out = passthru(dir.path(), "read", "SN-nbhd-9999");
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("SN-nbhd-9999"));
}

#[test]
fn ambiguity_csv() {
    let out = amisim(&["ambiguity", "--scenario", "fig3_flat", "--trials", "200"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trials,indistinguishable,tolerance"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields[0], "200");
    assert!(fields[1].parse::<usize>().unwrap() >= 180);
}

#[test]
fn show_scenario_round_trips() {
    let out = amisim(&["show-scenario", "--scenario", "fig3_random"]);
    assert_eq!(code(&out), 0);
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("copy.scn");
    fs::write(&path, stdout(&out)).unwrap();
    let again = amisim(&["show-scenario", "--scenario", path.to_str().unwrap()]);
    assert_eq!(stdout(&again), stdout(&out));
}
