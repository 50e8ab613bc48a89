//! Deterministic discrete-event kernel.
//!
//! Events are ordered by `(fire_at, seq)` where `seq` is a global enqueue
//! ordinal, so two runs with the same scenario and seed process exactly the
//! same sequence. Every processed event is folded into a SHA-256 digest of
//! the textual event log; the lines themselves are only retained on request.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use rand::Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::aggregator::{AggregatorError, CommandAck, CumulativeReading, OperatingStateReport};
use crate::metering::{ConnectionCommand, MeterReading};
use crate::rng::{RngFactory, SimRng};

/// Simulated time in whole seconds.
pub type SimTime = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    HeadEnd,
    Aggregator(u32),
    Meter(u32),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::HeadEnd => write!(f, "headend"),
            NodeId::Aggregator(i) => write!(f, "agg{i}"),
            NodeId::Meter(i) => write!(f, "meter{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    HeadEnd,
    Aggregator,
    Meter,
}

impl NodeId {
    pub fn role(&self) -> NodeRole {
        match self {
            NodeId::HeadEnd => NodeRole::HeadEnd,
            NodeId::Aggregator(_) => NodeRole::Aggregator,
            NodeId::Meter(_) => NodeRole::Meter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    ReadingBroadcast,
    Report,
    PassthruReadRequest,
    PassthruReadResponse,
    ConnectCommand,
    CommandAck,
}

impl MessageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MessageKind::ReadingBroadcast => "ReadingBroadcast",
            MessageKind::Report => "Report",
            MessageKind::PassthruReadRequest => "PassthruReadRequest",
            MessageKind::PassthruReadResponse => "PassthruReadResponse",
            MessageKind::ConnectCommand => "ConnectCommand",
            MessageKind::CommandAck => "CommandAck",
        }
    }

    /// Dataflow of the aggregation architecture: readings go up to the
    /// Aggregator, reports go up to the head-end, pass-thru traffic goes down
    /// from the head-end through the Aggregator and its answers come back.
    pub fn permits(&self, from: NodeRole, to: NodeRole) -> bool {
        use NodeRole::*;
        matches!(
            (self, from, to),
            (MessageKind::ReadingBroadcast, Meter, Aggregator)
                | (MessageKind::Report, Aggregator, HeadEnd)
                | (MessageKind::PassthruReadRequest, HeadEnd, Aggregator)
                | (MessageKind::PassthruReadResponse, Aggregator, HeadEnd)
                | (MessageKind::ConnectCommand, HeadEnd, Aggregator)
                | (MessageKind::ConnectCommand, Aggregator, Meter)
                | (MessageKind::CommandAck, Meter, Aggregator)
                | (MessageKind::CommandAck, Aggregator, HeadEnd)
        )
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    ReadingBroadcast(MeterReading),
    Report(OperatingStateReport),
    PassthruReadRequest {
        request_id: u64,
        serial: String,
    },
    PassthruReadResponse {
        request_id: u64,
        result: Result<CumulativeReading, AggregatorError>,
    },
    ConnectCommand {
        request_id: u64,
        serial: String,
        command: ConnectionCommand,
    },
    CommandAck {
        request_id: u64,
        result: Result<CommandAck, AggregatorError>,
    },
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::ReadingBroadcast(_) => MessageKind::ReadingBroadcast,
            Message::Report(_) => MessageKind::Report,
            Message::PassthruReadRequest { .. } => MessageKind::PassthruReadRequest,
            Message::PassthruReadResponse { .. } => MessageKind::PassthruReadResponse,
            Message::ConnectCommand { .. } => MessageKind::ConnectCommand,
            Message::CommandAck { .. } => MessageKind::CommandAck,
        }
    }
}

/// Anything the kernel can queue. Only payloads that wrap a [`Message`] can
/// travel over links; timers are scheduled directly.
pub trait EventPayload {
    fn kind_label(&self) -> &'static str;

    fn message_kind(&self) -> Option<MessageKind> {
        None
    }
}

impl EventPayload for Message {
    fn kind_label(&self) -> &'static str {
        self.kind().as_str()
    }

    fn message_kind(&self) -> Option<MessageKind> {
        Some(self.kind())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    now: SimTime,
}

impl SimClock {
    pub fn now(&self) -> SimTime {
        self.now
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<P> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub source: NodeId,
    pub target: NodeId,
    pub payload: P,
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.fire_at == other.0.fire_at && self.0.seq == other.0.seq
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap; reverse so the earliest (fire_at, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.fire_at, other.0.seq).cmp(&(self.0.fire_at, self.0.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkProfile {
    pub latency_s: SimTime,
    pub jitter_s: SimTime,
}

impl Default for LinkProfile {
    fn default() -> Self {
        Self {
            latency_s: 1,
            jitter_s: 0,
        }
    }
}

struct Link {
    profile: LinkProfile,
    rng: Option<SimRng>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("event at t={fire_at} is in the past (clock at t={now})")]
    PastEvent { fire_at: SimTime, now: SimTime },
    #[error("no link from {from} to {to}")]
    NoRoute { from: NodeId, to: NodeId },
    #[error("{kind} may not flow from {from} to {to}")]
    InvalidDirection {
        kind: MessageKind,
        from: NodeId,
        to: NodeId,
    },
    #[error("timer payloads cannot be sent over a link")]
    NotAMessage,
}

/// Incremental event-log digest with optional retention of the lines.
pub struct EventLog {
    hasher: Sha256,
    lines: Option<Vec<String>>,
    count: u64,
}

impl EventLog {
    fn new(retain: bool) -> Self {
        Self {
            hasher: Sha256::new(),
            lines: retain.then(Vec::new),
            count: 0,
        }
    }

    fn record(&mut self, t: SimTime, seq: u64, kind: &str, from: NodeId, to: NodeId) {
        let line = format!("t={t} seq={seq} kind={kind} from={from} to={to}");
        self.hasher.update(line.as_bytes());
        self.hasher.update(b"\n");
        self.count += 1;
        if let Some(lines) = self.lines.as_mut() {
            lines.push(line);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }

    pub fn lines(&self) -> Option<&[String]> {
        self.lines.as_deref()
    }
}

pub struct Simulation<P> {
    clock: SimClock,
    next_seq: u64,
    queue: BinaryHeap<Queued<P>>,
    links: BTreeMap<(NodeId, NodeId), Link>,
    rng: RngFactory,
    log: EventLog,
    sent: u64,
}

impl<P: EventPayload> Simulation<P> {
    pub fn new(seed: u64) -> Self {
        Self::with_event_log(seed, false)
    }

    /// Like [`Simulation::new`], but keeps every event-log line in memory.
    pub fn with_event_log(seed: u64, retain_lines: bool) -> Self {
        Self {
            clock: SimClock { now: 0 },
            next_seq: 0,
            queue: BinaryHeap::new(),
            links: BTreeMap::new(),
            rng: RngFactory::new(seed),
            log: EventLog::new(retain_lines),
            sent: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock.now
    }

    pub fn rng_factory(&self) -> &RngFactory {
        &self.rng
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn event_log(&self) -> &EventLog {
        &self.log
    }

    /// Number of messages handed to [`Simulation::send`].
    pub fn sent_count(&self) -> u64 {
        self.sent
    }

    /// Enqueue `payload` for `target`, returning the assigned ordinal.
    pub fn schedule(
        &mut self,
        fire_at: SimTime,
        source: NodeId,
        target: NodeId,
        payload: P,
    ) -> Result<u64, KernelError> {
        if fire_at < self.clock.now {
            return Err(KernelError::PastEvent {
                fire_at,
                now: self.clock.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(Event {
            fire_at,
            seq,
            source,
            target,
            payload,
        }));
        Ok(seq)
    }

    /// Add a one-way link.
    pub fn add_link(&mut self, from: NodeId, to: NodeId, profile: LinkProfile) {
        self.links.insert(
            (from, to),
            Link {
                profile,
                rng: None,
            },
        );
    }

    /// Add links in both directions with the same profile.
    pub fn connect(&mut self, a: NodeId, b: NodeId, profile: LinkProfile) {
        self.add_link(a, b, profile);
        self.add_link(b, a, profile);
    }

    pub fn has_link(&self, from: NodeId, to: NodeId) -> bool {
        self.links.contains_key(&(from, to))
    }

    /// Schedule delivery of `payload` over the `(from, to)` link at
    /// `now + latency + jitter`, where jitter is a uniform draw in
    /// `0..=jitter_s` from the link's own stream.
    pub fn send(&mut self, from: NodeId, to: NodeId, payload: P) -> Result<u64, KernelError> {
        let kind = payload.message_kind().ok_or(KernelError::NotAMessage)?;
        let rng_factory = self.rng;
        let link = self
            .links
            .get_mut(&(from, to))
            .ok_or(KernelError::NoRoute { from, to })?;
        if !kind.permits(from.role(), to.role()) {
            return Err(KernelError::InvalidDirection { kind, from, to });
        }
        let mut delay = link.profile.latency_s;
        if link.profile.jitter_s > 0 {
            let rng = link
                .rng
                .get_or_insert_with(|| rng_factory.fork(&format!("link/{from}->{to}")));
            delay += rng.gen_range(0..=link.profile.jitter_s);
        }
        let fire_at = self.clock.now + delay;
        self.sent += 1;
        self.schedule(fire_at, from, to, payload)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|q| q.0.fire_at)
    }

    /// Pop the next event if it fires at or before `limit`, advancing the
    /// clock to its timestamp.
    pub fn pop_due(&mut self, limit: SimTime) -> Option<Event<P>> {
        if self.peek_time()? > limit {
            return None;
        }
        let Queued(event) = self.queue.pop()?;
        debug_assert!(event.fire_at >= self.clock.now);
        self.clock.now = event.fire_at;
        self.log.record(
            event.fire_at,
            event.seq,
            event.payload.kind_label(),
            event.source,
            event.target,
        );
        Some(event)
    }

    /// Process every event with `fire_at <= t_end` in `(fire_at, seq)` order,
    /// then set the clock to `t_end`. The handler may schedule or send more
    /// events; those are processed too when they fall inside the horizon.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, Event<P>),
    {
        let mut processed = 0;
        while let Some(event) = self.pop_due(t_end) {
            handler(self, event);
            processed += 1;
        }
        if t_end > self.clock.now {
            self.clock.now = t_end;
        }
        processed
    }
}
