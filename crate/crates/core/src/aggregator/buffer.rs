use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::metering::MeterReading;
use crate::simkernel::SimTime;

use super::AggregatorError;

pub const DEFAULT_RETENTION_WINDOW_S: SimTime = 7200;

/// Retention-bounded store of raw readings for one Aggregator's meter group.
///
/// Readings are kept per serial in timestamp order with at most one reading
/// per `(serial, timestamp_s)`. Nothing leaves the buffer except through
/// reports and cumulative billing reads.
#[derive(Debug, Clone)]
pub struct RawDataBuffer {
    group: BTreeSet<String>,
    readings: BTreeMap<String, VecDeque<MeterReading>>,
    retention_window_s: SimTime,
    now: SimTime,
}

impl RawDataBuffer {
    pub fn new<I, S>(group: I, retention_window_s: SimTime) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            group: group.into_iter().map(Into::into).collect(),
            readings: BTreeMap::new(),
            retention_window_s,
            now: 0,
        }
    }

    pub fn retention_window_s(&self) -> SimTime {
        self.retention_window_s
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn is_member(&self, serial: &str) -> bool {
        self.group.contains(serial)
    }

    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.group.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.readings.values().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.values().all(VecDeque::is_empty)
    }

    /// Store `reading`; a later arrival for the same `(serial, timestamp_s)`
    /// replaces the earlier one.
    pub fn ingest(&mut self, reading: MeterReading) -> Result<(), AggregatorError> {
        if !self.group.contains(&reading.serial) {
            return Err(AggregatorError::ForeignMeter(reading.serial));
        }
        let series = self.readings.entry(reading.serial.clone()).or_default();
        match series.back() {
            Some(last) if last.timestamp_s < reading.timestamp_s => series.push_back(reading),
            None => series.push_back(reading),
            _ => {
                let idx = series.partition_point(|r| r.timestamp_s < reading.timestamp_s);
                match series.get_mut(idx) {
                    Some(slot) if slot.timestamp_s == reading.timestamp_s => *slot = reading,
                    _ => series.insert(idx, reading),
                }
            }
        }
        Ok(())
    }

    /// Drop every reading older than `now - retention_window_s`.
    pub fn evict_expired(&mut self, now: SimTime) -> usize {
        debug_assert!(now >= self.now, "buffer clock moved backwards");
        self.now = self.now.max(now);
        let Some(cutoff) = self.now.checked_sub(self.retention_window_s) else {
            return 0;
        };
        let mut evicted = 0;
        for series in self.readings.values_mut() {
            while series.front().is_some_and(|r| r.timestamp_s < cutoff) {
                series.pop_front();
                evicted += 1;
            }
        }
        self.readings.retain(|_, s| !s.is_empty());
        evicted
    }

    pub fn get(&self, serial: &str, timestamp_s: SimTime) -> Option<&MeterReading> {
        let series = self.readings.get(serial)?;
        let idx = series.partition_point(|r| r.timestamp_s < timestamp_s);
        series.get(idx).filter(|r| r.timestamp_s == timestamp_s)
    }

    pub fn latest(&self, serial: &str) -> Option<&MeterReading> {
        self.readings.get(serial)?.back()
    }

    /// Latest reading with `start_s <= timestamp_s < end_s`.
    pub fn latest_in_window(
        &self,
        serial: &str,
        start_s: SimTime,
        end_s: SimTime,
    ) -> Option<&MeterReading> {
        let series = self.readings.get(serial)?;
        let idx = series.partition_point(|r| r.timestamp_s < end_s);
        let r = series.get(idx.checked_sub(1)?)?;
        (r.timestamp_s >= start_s).then_some(r)
    }

    pub fn count_in_window(&self, start_s: SimTime, end_s: SimTime) -> usize {
        self.readings
            .values()
            .flatten()
            .filter(|r| (start_s..end_s).contains(&r.timestamp_s))
            .count()
    }

    /// Age of the oldest retained reading relative to the buffer clock.
    pub fn exposure_window_s(&self) -> SimTime {
        self.readings
            .values()
            .filter_map(VecDeque::front)
            .map(|r| self.now.saturating_sub(r.timestamp_s))
            .max()
            .unwrap_or(0)
    }
}

pub fn ingest_reading(
    buffer: &mut RawDataBuffer,
    reading: MeterReading,
) -> Result<(), AggregatorError> {
    buffer.ingest(reading)
}

pub fn evict_expired(buffer: &mut RawDataBuffer, now: SimTime) -> usize {
    buffer.evict_expired(now)
}
