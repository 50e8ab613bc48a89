//! Scenario definitions in the line-oriented `.scn` format.
//!
//! Global `key = value` lines come first, followed by one `[feeder <name>]`
//! section per feeder. `#` starts a comment. See `docs/scenario-format.md`
//! for the grammar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::aggregator::{DEFAULT_REPORT_INTERVAL_S, DEFAULT_RETENTION_WINDOW_S};
use crate::feeder::{build_feeder, FeederConfig, FeederTopology, LoadModel};
use crate::metering::DEFAULT_SAMPLE_INTERVAL_S;
use crate::simkernel::{LinkProfile, SimTime};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        message: message.into(),
    }
}

fn invalid(message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(message.into())
}

/// Houses `first..=last` of a feeder served by `aggregator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub aggregator: String,
    pub first_house: usize,
    pub last_house: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederSpec {
    pub name: String,
    pub config: FeederConfig,
    pub load: LoadModel,
    pub assignments: Vec<Assignment>,
}

impl FeederSpec {
    pub fn topology(&self) -> FeederTopology {
        build_feeder(self.config).expect("validated at parse time")
    }

    pub fn serial(&self, house: usize) -> String {
        meter_serial(&self.name, house)
    }

    /// Aggregator serving `house`.
    pub fn aggregator_for(&self, house: usize) -> Option<&str> {
        self.assignments
            .iter()
            .find(|a| (a.first_house..=a.last_house).contains(&house))
            .map(|a| a.aggregator.as_str())
    }
}

pub fn meter_serial(feeder: &str, house: usize) -> String {
    format!("SN-{feeder}-{house:04}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub duration_s: SimTime,
    pub sample_interval_s: SimTime,
    pub report_interval_s: SimTime,
    pub retention_window_s: SimTime,
    /// Standard deviation of additive voltage measurement noise; 0 disables it.
    pub noise_sigma_v: f64,
    pub meter_link: LinkProfile,
    pub uplink: LinkProfile,
    pub feeders: Vec<FeederSpec>,
}

impl Scenario {
    pub fn meter_count(&self) -> usize {
        self.feeders.iter().map(|f| f.config.house_count).sum()
    }

    /// Aggregator ids in first-appearance order.
    pub fn aggregator_ids(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut ids = Vec::new();
        for a in self.feeders.iter().flat_map(|f| &f.assignments) {
            if seen.insert(a.aggregator.clone()) {
                ids.push(a.aggregator.clone());
            }
        }
        ids
    }

    pub fn serials(&self) -> BTreeSet<String> {
        self.feeders
            .iter()
            .flat_map(|f| (1..=f.config.house_count).map(move |k| f.serial(k)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.feeders.is_empty() {
            return Err(invalid("at least one [feeder] section is required"));
        }
        for (name, v) in [
            ("duration_s", self.duration_s),
            ("sample_interval_s", self.sample_interval_s),
            ("report_interval_s", self.report_interval_s),
            ("retention_window_s", self.retention_window_s),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if !(self.noise_sigma_v >= 0.0 && self.noise_sigma_v.is_finite()) {
            return Err(invalid("noise_sigma_v must be non-negative"));
        }
        let mut names = BTreeSet::new();
        let mut agg_voltage: BTreeMap<&str, f64> = BTreeMap::new();
        for f in &self.feeders {
            check_name("feeder name", &f.name)?;
            if !names.insert(f.name.as_str()) {
                return Err(invalid(format!("duplicate feeder {}", f.name)));
            }
            build_feeder(f.config).map_err(|e| invalid(format!("feeder {}: {e}", f.name)))?;
            f.load
                .validate()
                .map_err(|e| invalid(format!("feeder {}: {e}", f.name)))?;

            let n = f.config.house_count;
            let mut owner: Vec<Option<&str>> = vec![None; n];
            for a in &f.assignments {
                check_name("aggregator id", &a.aggregator)?;
                if a.first_house == 0 || a.first_house > a.last_house || a.last_house > n {
                    return Err(invalid(format!(
                        "feeder {}: assignment {}:{}-{} is outside houses 1-{n}",
                        f.name, a.aggregator, a.first_house, a.last_house
                    )));
                }
                for house in a.first_house..=a.last_house {
                    if let Some(prev) = owner[house - 1] {
                        return Err(invalid(format!(
                            "meter {} assigned to both {prev} and {}",
                            f.serial(house),
                            a.aggregator
                        )));
                    }
                    owner[house - 1] = Some(&a.aggregator);
                }
                let v = f.config.source_voltage_v;
                if let Some(&other) = agg_voltage.get(a.aggregator.as_str()) {
                    if other != v {
                        return Err(invalid(format!(
                            "aggregator {} spans feeders with different source voltages",
                            a.aggregator
                        )));
                    }
                }
                agg_voltage.insert(&a.aggregator, v);
            }
            if let Some(house) = owner.iter().position(Option::is_none) {
                return Err(invalid(format!(
                    "meter {} is not assigned to any aggregator",
                    f.serial(house + 1)
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "duration_s = {}", self.duration_s);
        let _ = writeln!(s, "sample_interval_s = {}", self.sample_interval_s);
        let _ = writeln!(s, "report_interval_s = {}", self.report_interval_s);
        let _ = writeln!(s, "retention_window_s = {}", self.retention_window_s);
        let _ = writeln!(s, "noise_sigma_v = {}", self.noise_sigma_v);
        let _ = writeln!(s, "meter_link_latency_s = {}", self.meter_link.latency_s);
        let _ = writeln!(s, "meter_link_jitter_s = {}", self.meter_link.jitter_s);
        let _ = writeln!(s, "uplink_latency_s = {}", self.uplink.latency_s);
        let _ = writeln!(s, "uplink_jitter_s = {}", self.uplink.jitter_s);
        for f in &self.feeders {
            let c = &f.config;
            let _ = writeln!(s, "\n[feeder {}]", f.name);
            let _ = writeln!(s, "source_voltage_v = {}", c.source_voltage_v);
            let _ = writeln!(s, "trunk_length_m = {}", c.trunk_length_m);
            let _ = writeln!(s, "spacing_m = {}", c.spacing_m);
            let _ = writeln!(s, "house_count = {}", c.house_count);
            let _ = writeln!(s, "resistance_ohm_per_m = {:e}", c.resistance_ohm_per_m);
            match f.load {
                LoadModel::Fixed { watts } => {
                    let _ = writeln!(s, "load = fixed {watts}");
                }
                LoadModel::Uniform { min_w, max_w } => {
                    let _ = writeln!(s, "load = uniform {min_w} {max_w}");
                }
            }
            let assigns: Vec<String> = f
                .assignments
                .iter()
                .map(|a| format!("{}:{}-{}", a.aggregator, a.first_house, a.last_house))
                .collect();
            let _ = writeln!(s, "assign = {}", assigns.join(", "));
        }
        s
    }
}

fn check_name(what: &str, name: &str) -> Result<(), ScenarioError> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("{what} {name:?} must be [A-Za-z0-9_-]+")))
    }
}

struct FeederDraft {
    name: String,
    line: usize,
    keys: BTreeSet<String>,
    config: FeederConfig,
    load: Option<LoadModel>,
    house_count: Option<usize>,
    assignments: Vec<Assignment>,
}

impl FeederDraft {
    fn finish(self) -> Result<FeederSpec, ScenarioError> {
        let house_count = self
            .house_count
            .ok_or_else(|| parse_err(self.line, format!("feeder {} has no house_count", self.name)))?;
        let load = self
            .load
            .ok_or_else(|| parse_err(self.line, format!("feeder {} has no load", self.name)))?;
        Ok(FeederSpec {
            name: self.name,
            config: FeederConfig {
                house_count,
                ..self.config
            },
            load,
            assignments: self.assignments,
        })
    }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ScenarioError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("{key}: cannot parse {value:?}")))
}

fn parse_load(line: usize, value: &str) -> Result<LoadModel, ScenarioError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    match parts.as_slice() {
        ["fixed", w] => Ok(LoadModel::Fixed {
            watts: num(line, "load", w)?,
        }),
        ["uniform", lo, hi] => Ok(LoadModel::Uniform {
            min_w: num(line, "load", lo)?,
            max_w: num(line, "load", hi)?,
        }),
        _ => Err(parse_err(
            line,
            "load must be `fixed <watts>` or `uniform <min_w> <max_w>`",
        )),
    }
}

fn parse_assignments(line: usize, value: &str) -> Result<Vec<Assignment>, ScenarioError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let bad = || parse_err(line, format!("assignment {item:?} must look like A1:1-50"));
            let (agg, range) = item.split_once(':').ok_or_else(bad)?;
            let (first, last) = range.split_once('-').ok_or_else(bad)?;
            Ok(Assignment {
                aggregator: agg.trim().to_string(),
                first_house: first.trim().parse().map_err(|_| bad())?,
                last_house: last.trim().parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut globals: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut feeders: Vec<FeederSpec> = Vec::new();
    let mut current: Option<FeederDraft> = None;
    let mut saw_content = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        saw_content = true;

        if let Some(header) = content.strip_prefix('[') {
            let inner = header
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "section header must end with ]"))?;
            let name = inner
                .trim()
                .strip_prefix("feeder")
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| parse_err(line, "expected [feeder <name>]"))?;
            if let Some(done) = current.take() {
                feeders.push(done.finish()?);
            }
            current = Some(FeederDraft {
                name: name.to_string(),
                line,
                keys: BTreeSet::new(),
                config: FeederConfig::default(),
                load: None,
                house_count: None,
                assignments: Vec::new(),
            });
            continue;
        }

        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        if key.is_empty() || value.is_empty() {
            return Err(parse_err(line, "expected `key = value`"));
        }

        match current.as_mut() {
            None => {
                const GLOBAL_KEYS: [&str; 10] = [
                    "seed",
                    "duration_s",
                    "sample_interval_s",
                    "report_interval_s",
                    "retention_window_s",
                    "noise_sigma_v",
                    "meter_link_latency_s",
                    "meter_link_jitter_s",
                    "uplink_latency_s",
                    "uplink_jitter_s",
                ];
                if !GLOBAL_KEYS.contains(&key) {
                    return Err(parse_err(line, format!("unknown key {key}")));
                }
                if globals
                    .insert(key.to_string(), (line, value.to_string()))
                    .is_some()
                {
                    return Err(parse_err(line, format!("duplicate key {key}")));
                }
            }
            Some(f) => {
                if key != "assign" && !f.keys.insert(key.to_string()) {
                    return Err(parse_err(line, format!("duplicate key {key}")));
                }
                match key {
                    "source_voltage_v" => f.config.source_voltage_v = num(line, key, value)?,
                    "trunk_length_m" => f.config.trunk_length_m = num(line, key, value)?,
                    "spacing_m" => f.config.spacing_m = num(line, key, value)?,
                    "resistance_ohm_per_m" => {
                        f.config.resistance_ohm_per_m = num(line, key, value)?
                    }
                    "house_count" => f.house_count = Some(num(line, key, value)?),
                    "load" => f.load = Some(parse_load(line, value)?),
                    "assign" => f.assignments.extend(parse_assignments(line, value)?),
                    _ => return Err(parse_err(line, format!("unknown feeder key {key}"))),
                }
            }
        }
    }
    if !saw_content {
        return Err(parse_err(1, "empty scenario"));
    }
    if let Some(done) = current.take() {
        feeders.push(done.finish()?);
    }

    let get = |key: &str| globals.get(key).map(|(l, v)| (*l, v.as_str()));
    let required = |key: &str| -> Result<(usize, &str), ScenarioError> {
        get(key).ok_or_else(|| invalid(format!("missing required key {key}")))
    };
    let time_or = |key: &str, default: SimTime| -> Result<SimTime, ScenarioError> {
        get(key).map_or(Ok(default), |(l, v)| num(l, key, v))
    };

    let (l, v) = required("seed")?;
    let seed = num(l, "seed", v)?;
    let (l, v) = required("duration_s")?;
    let duration_s = num(l, "duration_s", v)?;
    let noise_sigma_v = get("noise_sigma_v").map_or(Ok(0.0), |(l, v)| num(l, "noise_sigma_v", v))?;

    let scenario = Scenario {
        seed,
        duration_s,
        sample_interval_s: time_or("sample_interval_s", DEFAULT_SAMPLE_INTERVAL_S)?,
        report_interval_s: time_or("report_interval_s", DEFAULT_REPORT_INTERVAL_S)?,
        retention_window_s: time_or("retention_window_s", DEFAULT_RETENTION_WINDOW_S)?,
        noise_sigma_v,
        meter_link: LinkProfile {
            latency_s: time_or("meter_link_latency_s", 1)?,
            jitter_s: time_or("meter_link_jitter_s", 0)?,
        },
        uplink: LinkProfile {
            latency_s: time_or("uplink_latency_s", 1)?,
            jitter_s: time_or("uplink_jitter_s", 0)?,
        },
        feeders,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub const FIG3_FLAT: &str = include_str!("../scenarios/fig3_flat.scn");
pub const FIG3_RANDOM: &str = include_str!("../scenarios/fig3_random.scn");
pub const SCALE_10K: &str = include_str!("../scenarios/scale_10k.scn");

pub const CANONICAL_NAMES: [&str; 3] = ["fig3_flat", "fig3_random", "scale_10k"];

pub fn canonical_scenario_text(name: &str) -> Option<&'static str> {
    match name {
        "fig3_flat" => Some(FIG3_FLAT),
        "fig3_random" => Some(FIG3_RANDOM),
        "scale_10k" => Some(SCALE_10K),
        _ => None,
    }
}

/// The bundled scenarios, by name.
pub fn canonical_scenarios() -> BTreeMap<&'static str, Scenario> {
    CANONICAL_NAMES
        .iter()
        .map(|&name| {
            let text = canonical_scenario_text(name).expect("bundled");
            (name, parse_scenario(text).expect("bundled scenarios are valid"))
        })
        .collect()
}
