//! A runnable AMI deployment built from a [`Scenario`].
//!
//! Every sample interval each feeder draws fresh demands, the feeder model
//! solves the voltage profile and every meter reads its bus and broadcasts to
//! its Aggregator. Every report interval each Aggregator evicts stale
//! readings and sends one operating-state report to the head-end. Pass-thru
//! requests are real messages that travel head-end -> Aggregator (-> meter)
//! and back through the kernel.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregator::{
    Aggregator, AggregatorError, CommandAck, CumulativeReading, OperatingStateReport, ReportWindow,
};
use crate::feeder::{solve_voltage_profile, FeederError, FeederTopology, LoadModel, LoadVector};
use crate::headend::{HeadendError, StateHistory, WholeGridState};
use crate::metering::{ConnectionCommand, MeterIdentity, MeterState, MeteringError};
use crate::rng::SimRng;
use crate::scenario::{Scenario, ScenarioError};
use crate::simkernel::{Event, EventPayload, KernelError, Message, MessageKind, NodeId, SimTime, Simulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Feeder(#[from] FeederError),
    #[error("meter {serial}: {source}")]
    Metering {
        serial: String,
        source: MeteringError,
    },
    #[error(transparent)]
    Aggregator(#[from] AggregatorError),
    #[error(transparent)]
    Headend(#[from] HeadendError),
    #[error("unknown aggregator {0}")]
    UnknownAggregator(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridEvent {
    Deliver(Message),
    SampleTick { feeder: usize },
    ReportTick { aggregator: u32 },
}

impl EventPayload for GridEvent {
    fn kind_label(&self) -> &'static str {
        match self {
            GridEvent::Deliver(m) => m.kind().as_str(),
            GridEvent::SampleTick { .. } => "SampleTick",
            GridEvent::ReportTick { .. } => "ReportTick",
        }
    }

    fn message_kind(&self) -> Option<MessageKind> {
        match self {
            GridEvent::Deliver(m) => Some(m.kind()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub house_index: usize,
    pub distance_m: f64,
    pub load_w: f64,
    pub voltage_v: f64,
}

pub const PROFILE_CSV_HEADER: &str = "house_index,distance_m,load_w,voltage_v";

pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from(PROFILE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.house_index, r.distance_m, r.load_w, r.voltage_v);
    }
    out
}

/// Counters and digests describing a completed (or partial) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub meters: usize,
    pub aggregators: usize,
    pub events_processed: u64,
    pub reading_events: u64,
    pub raw_readings: u64,
    pub raw_bytes: u64,
    pub reports: u64,
    pub report_bytes: u64,
    pub max_exposure_s: SimTime,
    pub grid_total_load_w: f64,
    pub event_log_sha256: String,
    pub report_log_sha256: String,
}

impl RunSummary {
    /// Contents of `digest.txt`.
    pub fn digest_text(&self) -> String {
        format!(
            "events={}\nevent_log_sha256={}\nreport_log_sha256={}\n",
            self.events_processed, self.event_log_sha256, self.report_log_sha256
        )
    }
}

struct FeederRuntime {
    topology: FeederTopology,
    load: LoadModel,
    first_meter: usize,
    load_rng: SimRng,
    noise: Option<(Normal<f64>, SimRng)>,
}

struct MeterSlot {
    state: MeterState,
    aggregator: u32,
}

#[derive(Default)]
struct HeadEnd {
    state: WholeGridState,
    report_log: Vec<String>,
    window_totals: BTreeMap<SimTime, f64>,
}

#[derive(Default)]
struct Counters {
    reading_events: u64,
    raw_readings: u64,
    raw_bytes: u64,
    reports: u64,
    report_bytes: u64,
    max_exposure_s: SimTime,
}

pub struct GridSimulation {
    scenario: Scenario,
    kernel: Simulation<GridEvent>,
    feeders: Vec<FeederRuntime>,
    meters: Vec<MeterSlot>,
    meter_index: BTreeMap<String, u32>,
    aggregators: Vec<Aggregator>,
    aggregator_index: BTreeMap<String, u32>,
    headend: HeadEnd,
    counters: Counters,
    first_profile: Option<Vec<ProfileRow>>,
    responses: BTreeMap<u64, Message>,
    next_request_id: u64,
    started: bool,
}

impl GridSimulation {
    pub fn new(scenario: &Scenario) -> Result<Self, GridError> {
        Self::build(scenario, false)
    }

    /// Like [`GridSimulation::new`] but retains every event-log line.
    pub fn with_event_log(scenario: &Scenario) -> Result<Self, GridError> {
        Self::build(scenario, true)
    }

    fn build(scenario: &Scenario, retain_log: bool) -> Result<Self, GridError> {
        scenario.validate()?;
        let mut kernel = Simulation::with_event_log(scenario.seed, retain_log);
        let rngs = *kernel.rng_factory();

        let mut aggregator_index = BTreeMap::new();
        for (i, id) in scenario.aggregator_ids().into_iter().enumerate() {
            aggregator_index.insert(id, i as u32);
        }
        let mut positions: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); aggregator_index.len()];
        let mut nominal = vec![0.0; aggregator_index.len()];

        let mut feeders = Vec::with_capacity(scenario.feeders.len());
        let mut meters = Vec::with_capacity(scenario.meter_count());
        let mut meter_index = BTreeMap::new();
        for spec in &scenario.feeders {
            let topology = spec.topology();
            let noise = (scenario.noise_sigma_v > 0.0).then(|| {
                let normal = Normal::new(0.0, scenario.noise_sigma_v).expect("validated sigma");
                (normal, rngs.fork(&format!("noise/{}", spec.name)))
            });
            feeders.push(FeederRuntime {
                first_meter: meters.len(),
                load: spec.load,
                load_rng: rngs.fork(&format!("loads/{}", spec.name)),
                noise,
                topology: topology.clone(),
            });
            for house in 1..=topology.house_count() {
                let serial = spec.serial(house);
                let agg_id = spec.aggregator_for(house).expect("validated assignment");
                let agg = aggregator_index[agg_id];
                positions[agg as usize].insert(serial.clone(), topology.distance_m(house));
                nominal[agg as usize] = topology.source_voltage_v();
                let state = MeterState::new(
                    MeterIdentity {
                        serial: serial.clone(),
                        house_index: house,
                    },
                    scenario.sample_interval_s,
                )
                .map_err(|source| GridError::Metering {
                    serial: serial.clone(),
                    source,
                })?;
                let idx = meters.len() as u32;
                kernel.connect(NodeId::Meter(idx), NodeId::Aggregator(agg), scenario.meter_link);
                meter_index.insert(serial, idx);
                meters.push(MeterSlot {
                    state,
                    aggregator: agg,
                });
            }
        }

        let mut aggregators = Vec::with_capacity(aggregator_index.len());
        let mut ordered: Vec<(&String, &u32)> = aggregator_index.iter().collect();
        ordered.sort_by_key(|(_, &i)| i);
        for ((id, &i), pos) in ordered.into_iter().zip(positions) {
            kernel.connect(NodeId::Aggregator(i), NodeId::HeadEnd, scenario.uplink);
            aggregators.push(Aggregator::new(
                id.clone(),
                pos,
                nominal[i as usize],
                scenario.retention_window_s,
            ));
        }

        Ok(Self {
            scenario: scenario.clone(),
            kernel,
            feeders,
            meters,
            meter_index,
            aggregators,
            aggregator_index,
            headend: HeadEnd::default(),
            counters: Counters::default(),
            first_profile: None,
            responses: BTreeMap::new(),
            next_request_id: 0,
            started: false,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn now(&self) -> SimTime {
        self.kernel.now()
    }

    /// Time by which every message produced during `duration_s` has arrived.
    pub fn end_time(&self) -> SimTime {
        let s = &self.scenario;
        s.duration_s
            + s.meter_link.latency_s
            + s.meter_link.jitter_s
            + s.uplink.latency_s
            + s.uplink.jitter_s
    }

    fn start(&mut self) -> Result<(), GridError> {
        if self.started {
            return Ok(());
        }
        self.started = true;
        for f in 0..self.feeders.len() {
            let node = NodeId::Meter(self.feeders[f].first_meter as u32);
            self.kernel
                .schedule(0, node, node, GridEvent::SampleTick { feeder: f })?;
        }
        let first_report = self.scenario.report_interval_s;
        if first_report <= self.scenario.duration_s {
            for a in 0..self.aggregators.len() as u32 {
                let node = NodeId::Aggregator(a);
                self.kernel
                    .schedule(first_report, node, node, GridEvent::ReportTick { aggregator: a })?;
            }
        }
        Ok(())
    }

    /// Process every event up to and including `t`.
    pub fn run_until(&mut self, t: SimTime) -> Result<(), GridError> {
        self.start()?;
        while let Some(event) = self.kernel.pop_due(t) {
            self.dispatch(event)?;
        }
        self.kernel.run_until(t, |_, _| {});
        Ok(())
    }

    /// Run the whole scenario, including delivery of the final reports.
    pub fn run(&mut self) -> Result<RunSummary, GridError> {
        self.run_until(self.end_time())?;
        Ok(self.summary())
    }

    fn dispatch(&mut self, event: Event<GridEvent>) -> Result<(), GridError> {
        match event.payload {
            GridEvent::SampleTick { feeder } => self.sample_feeder(feeder),
            GridEvent::ReportTick { aggregator } => self.emit_report(aggregator),
            GridEvent::Deliver(msg) => self.deliver(event.source, event.target, msg),
        }
    }

    fn sample_feeder(&mut self, f: usize) -> Result<(), GridError> {
        let t = self.kernel.now();
        let feeder = &mut self.feeders[f];
        let n = feeder.topology.house_count();
        let first = feeder.first_meter;
        let demand = feeder.load.draw(n, &mut feeder.load_rng).into_inner();
        let drawn: Vec<f64> = demand
            .iter()
            .enumerate()
            .map(|(i, &w)| self.meters[first + i].state.drawn_load_w(w))
            .collect();
        let profile = solve_voltage_profile(&feeder.topology, &LoadVector::new(drawn.clone())?)?;

        if f == 0 && self.first_profile.is_none() {
            self.first_profile = Some(
                (0..n)
                    .map(|i| ProfileRow {
                        house_index: i + 1,
                        distance_m: profile.distances_m[i],
                        load_w: drawn[i],
                        voltage_v: profile.voltages_v[i],
                    })
                    .collect(),
            );
        }

        for (i, &d) in demand.iter().enumerate() {
            let mut v = profile.voltages_v[i];
            if let Some((normal, rng)) = feeder.noise.as_mut() {
                v += normal.sample(rng);
            }
            let slot = &mut self.meters[first + i];
            let reading = slot.state.read(v, d, t).map_err(|source| GridError::Metering {
                serial: slot.state.serial().to_string(),
                source,
            })?;
            let agg = NodeId::Aggregator(slot.aggregator);
            self.kernel.send(
                NodeId::Meter((first + i) as u32),
                agg,
                GridEvent::Deliver(Message::ReadingBroadcast(reading)),
            )?;
        }

        let next = t + self.scenario.sample_interval_s;
        if next < self.scenario.duration_s {
            let node = NodeId::Meter(first as u32);
            self.kernel
                .schedule(next, node, node, GridEvent::SampleTick { feeder: f })?;
        }
        Ok(())
    }

    fn emit_report(&mut self, a: u32) -> Result<(), GridError> {
        let t = self.kernel.now();
        let interval = self.scenario.report_interval_s;
        let window = ReportWindow::new(t.saturating_sub(interval), t);
        let agg = &mut self.aggregators[a as usize];
        let outcome = agg.report(window, t);
        self.counters.max_exposure_s = self
            .counters
            .max_exposure_s
            .max(agg.buffer().exposure_window_s());
        match outcome {
            Ok(report) => {
                self.kernel.send(
                    NodeId::Aggregator(a),
                    NodeId::HeadEnd,
                    GridEvent::Deliver(Message::Report(report)),
                )?;
            }
            Err(AggregatorError::NoData) => {}
            Err(e) => return Err(e.into()),
        }
        if t + interval <= self.scenario.duration_s {
            let node = NodeId::Aggregator(a);
            self.kernel
                .schedule(t + interval, node, node, GridEvent::ReportTick { aggregator: a })?;
        }
        Ok(())
    }

    fn deliver(&mut self, from: NodeId, to: NodeId, msg: Message) -> Result<(), GridError> {
        match (to, msg) {
            (NodeId::Aggregator(a), Message::ReadingBroadcast(reading)) => {
                self.counters.reading_events += 1;
                self.counters.raw_readings += 1;
                self.counters.raw_bytes += reading.to_record().len() as u64 + 1;
                self.aggregators[a as usize].buffer_mut().ingest(reading)?;
            }
            (NodeId::HeadEnd, Message::Report(report)) => {
                let record = report.to_record();
                self.counters.reports += 1;
                self.counters.report_bytes += record.len() as u64 + 1;
                *self
                    .headend
                    .window_totals
                    .entry(report.window.end_s)
                    .or_insert(0.0) += report.total_load_w;
                self.headend.report_log.push(record);
                self.headend.state.as_of_s = self.kernel.now();
                self.headend.state.apply(report);
            }
            (NodeId::Aggregator(a), Message::PassthruReadRequest { request_id, serial }) => {
                let result = self.aggregators[a as usize].passthru_read(&serial);
                self.kernel.send(
                    to,
                    NodeId::HeadEnd,
                    GridEvent::Deliver(Message::PassthruReadResponse { request_id, result }),
                )?;
            }
            (NodeId::Aggregator(a), Message::ConnectCommand { request_id, serial, command }) => {
                match self.aggregators[a as usize].check_member(&serial) {
                    Ok(()) => {
                        let meter = NodeId::Meter(self.meter_index[&serial]);
                        self.kernel.send(
                            to,
                            meter,
                            GridEvent::Deliver(Message::ConnectCommand {
                                request_id,
                                serial,
                                command,
                            }),
                        )?;
                    }
                    Err(e) => {
                        self.kernel.send(
                            to,
                            NodeId::HeadEnd,
                            GridEvent::Deliver(Message::CommandAck {
                                request_id,
                                result: Err(e),
                            }),
                        )?;
                    }
                }
            }
            (NodeId::Meter(m), Message::ConnectCommand { request_id, command, .. }) => {
                let slot = &mut self.meters[m as usize];
                let service_state = slot.state.apply(command);
                let ack = CommandAck {
                    serial: slot.state.serial().to_string(),
                    service_state,
                };
                self.kernel.send(
                    to,
                    from,
                    GridEvent::Deliver(Message::CommandAck {
                        request_id,
                        result: Ok(ack),
                    }),
                )?;
            }
            (NodeId::Aggregator(_), msg @ Message::CommandAck { .. }) => {
                self.kernel
                    .send(to, NodeId::HeadEnd, GridEvent::Deliver(msg))?;
            }
            (NodeId::HeadEnd, msg @ Message::PassthruReadResponse { request_id, .. })
            | (NodeId::HeadEnd, msg @ Message::CommandAck { request_id, .. }) => {
                self.responses.insert(request_id, msg);
            }
            (to, msg) => unreachable!("kernel routed {} to {to}", msg.kind()),
        }
        Ok(())
    }

    fn aggregator_node(&self, aggregator_id: &str) -> Result<NodeId, GridError> {
        self.aggregator_index
            .get(aggregator_id)
            .map(|&i| NodeId::Aggregator(i))
            .ok_or_else(|| GridError::UnknownAggregator(aggregator_id.to_string()))
    }

    fn request(&mut self, to: NodeId, build: impl FnOnce(u64) -> Message) -> Result<Message, GridError> {
        self.start()?;
        let request_id = self.next_request_id;
        self.next_request_id += 1;
        self.kernel
            .send(NodeId::HeadEnd, to, GridEvent::Deliver(build(request_id)))?;
        loop {
            if let Some(msg) = self.responses.remove(&request_id) {
                return Ok(msg);
            }
            let event = self
                .kernel
                .pop_due(SimTime::MAX)
                .ok_or(HeadendError::NoResponse(request_id))?;
            self.dispatch(event)?;
        }
    }

    /// Automated meter read through the Aggregator's pass-thru.
    pub fn poll_meter(&mut self, aggregator_id: &str, serial: &str) -> Result<CumulativeReading, GridError> {
        let to = self.aggregator_node(aggregator_id)?;
        let serial = serial.to_string();
        match self.request(to, |request_id| Message::PassthruReadRequest { request_id, serial })? {
            Message::PassthruReadResponse { result, .. } => Ok(result?),
            other => unreachable!("unexpected response {:?}", other.kind()),
        }
    }

    /// Connect or disconnect a meter through the Aggregator's pass-thru.
    pub fn command_connection(
        &mut self,
        aggregator_id: &str,
        serial: &str,
        command: ConnectionCommand,
    ) -> Result<CommandAck, GridError> {
        let to = self.aggregator_node(aggregator_id)?;
        let serial = serial.to_string();
        match self.request(to, |request_id| Message::ConnectCommand {
            request_id,
            serial,
            command,
        })? {
            Message::CommandAck { result, .. } => Ok(result?),
            other => unreachable!("unexpected response {:?}", other.kind()),
        }
    }

    pub fn grid_state(&self) -> &WholeGridState {
        &self.headend.state
    }

    pub fn history(&self) -> StateHistory {
        let mut h = StateHistory::new();
        for (&t, &w) in &self.headend.window_totals {
            h.push(t, w).expect("BTreeMap keys increase");
        }
        h
    }

    pub fn report_log(&self) -> &[String] {
        &self.headend.report_log
    }

    pub fn reports(&self) -> Vec<OperatingStateReport> {
        self.headend
            .report_log
            .iter()
            .map(|r| OperatingStateReport::from_record(r).expect("own records parse"))
            .collect()
    }

    /// Voltage profile of the first feeder at the first sample.
    pub fn first_profile(&self) -> Option<&[ProfileRow]> {
        self.first_profile.as_deref()
    }

    pub fn event_log_lines(&self) -> Option<&[String]> {
        self.kernel.event_log().lines()
    }

    pub fn aggregator(&self, id: &str) -> Option<&Aggregator> {
        self.aggregator_index.get(id).map(|&i| &self.aggregators[i as usize])
    }

    pub fn aggregators(&self) -> &[Aggregator] {
        &self.aggregators
    }

    pub fn meter(&self, serial: &str) -> Option<&MeterState> {
        self.meter_index.get(serial).map(|&i| &self.meters[i as usize].state)
    }

    pub fn summary(&self) -> RunSummary {
        let mut hasher = Sha256::new();
        for line in &self.headend.report_log {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        RunSummary {
            meters: self.meters.len(),
            aggregators: self.aggregators.len(),
            events_processed: self.kernel.event_log().count(),
            reading_events: self.counters.reading_events,
            raw_readings: self.counters.raw_readings,
            raw_bytes: self.counters.raw_bytes,
            reports: self.counters.reports,
            report_bytes: self.counters.report_bytes,
            max_exposure_s: self.counters.max_exposure_s,
            grid_total_load_w: self.headend.state.grid_total_load_w,
            event_log_sha256: self.kernel.event_log().digest_hex(),
            report_log_sha256: hex::encode(hasher.finalize()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metering::ServiceState;
    use crate::scenario::{canonical_scenarios, parse_scenario};

    fn small(extra: &str) -> Scenario {
        parse_scenario(&format!(
            "seed = 3\nduration_s = 1800\n{extra}\n[feeder f]\nhouse_count = 6\nload = uniform 500 5000\nassign = A:1-3, B:4-6\n"
        ))
        .unwrap()
    }

    #[test]
    fn reports_flow_to_headend() {
        let mut sim = GridSimulation::new(&small("")).unwrap();
        let summary = sim.run().unwrap();
        assert_eq!(summary.reports, 4); // 2 aggregators x 2 windows
        assert_eq!(summary.reading_events, 6 * 30);
        assert_eq!(sim.grid_state().aggregator_count(), 2);
        let h = sim.history();
        assert_eq!(h.entries().iter().map(|e| e.window_end_s).collect::<Vec<_>>(), vec![900, 1800]);
        assert_eq!(summary.raw_readings, summary.reading_events);
    }

    #[test]
    fn flat_profile_captured() {
        let s = &canonical_scenarios()["fig3_flat"];
        let mut sim = GridSimulation::new(s).unwrap();
        sim.run_until(0).unwrap();
        let rows = sim.first_profile().unwrap();
        assert_eq!(rows.len(), 100);
        assert!((rows[99].voltage_v - 225.0).abs() <= 0.1);
        assert!(profile_csv(rows).starts_with("house_index,distance_m,load_w,voltage_v\n1,500,10000,"));
    }

    #[test]
    fn jittered_runs_replay() {
        let s = small("meter_link_jitter_s = 4\nuplink_jitter_s = 2");
        let a = GridSimulation::new(&s).unwrap().run().unwrap();
        let b = GridSimulation::new(&s).unwrap().run().unwrap();
        assert_eq!(a, b);
        let mut other = s.clone();
        other.seed += 1;
        let c = GridSimulation::new(&other).unwrap().run().unwrap();
        assert_ne!(a.event_log_sha256, c.event_log_sha256);
    }

    #[test]
    fn passthru_round_trip() {
        let mut sim = GridSimulation::new(&small("")).unwrap();
        sim.run().unwrap();
        let direct = sim.aggregator("A").unwrap().passthru_read("SN-f-0002").unwrap();
        let polled = sim.poll_meter("A", "SN-f-0002").unwrap();
        assert_eq!(polled, direct);
        assert_eq!(polled.cumulative_wh, sim.meter("SN-f-0002").unwrap().cumulative_wh());
        assert!(matches!(
            sim.poll_meter("Z", "SN-f-0002"),
            Err(GridError::UnknownAggregator(_))
        ));
        assert!(matches!(
            sim.poll_meter("B", "SN-f-0002"),
            Err(GridError::Aggregator(AggregatorError::UnknownMeter(_)))
        ));
    }

    #[test]
    fn disconnect_drops_next_total() {
        let s = &canonical_scenarios()["fig3_flat"];
        let mut sim = GridSimulation::new(s).unwrap();
        sim.run_until(1000).unwrap();
        let before = sim.grid_state().grid_total_load_w;
        assert_eq!(before, 1.0e6);
        let ack = sim
            .command_connection("A1", "SN-nbhd-0017", ConnectionCommand::Disconnect)
            .unwrap();
        assert_eq!(ack.service_state, ServiceState::Disconnected);
        let again = sim
            .command_connection("A1", "SN-nbhd-0017", ConnectionCommand::Disconnect)
            .unwrap();
        assert_eq!(again.service_state, ServiceState::Disconnected);
        sim.run().unwrap();
        assert_eq!(sim.grid_state().grid_total_load_w, before - 10_000.0);
        let ack = sim
            .command_connection("A1", "SN-nbhd-0018", ConnectionCommand::Connect)
            .unwrap();
        assert_eq!(ack.service_state, ServiceState::Connected);
        assert!(matches!(
            sim.command_connection("A1", "SN-nope", ConnectionCommand::Connect),
            Err(GridError::Aggregator(AggregatorError::UnknownMeter(_)))
        ));
    }

    #[test]
    fn noise_perturbs_voltages_only() {
        let clean = small("");
        let noisy = small("noise_sigma_v = 0.5");
        let mut a = GridSimulation::new(&clean).unwrap();
        let mut b = GridSimulation::new(&noisy).unwrap();
        a.run().unwrap();
        b.run().unwrap();
        let (ra, rb) = (a.reports(), b.reports());
        for (x, y) in ra.iter().zip(&rb) {
            assert_eq!(x.total_load_w, y.total_load_w);
            assert_ne!(x.voltage_mean_v, y.voltage_mean_v);
        }
    }

    #[test]
    fn event_log_lines_are_formatted() {
        let mut sim = GridSimulation::with_event_log(&small("")).unwrap();
        sim.run().unwrap();
        let lines = sim.event_log_lines().unwrap();
        assert_eq!(lines[0], "t=0 seq=0 kind=SampleTick from=meter0 to=meter0");
        assert!(lines.iter().any(|l| l.contains("kind=Report from=agg0 to=headend")));
        assert_eq!(lines.len() as u64, sim.summary().events_processed);
    }
}
