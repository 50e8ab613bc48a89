//! Field Aggregator: raw data buffer, operating-state extraction and the
//! on-demand pass-thru.

mod buffer;
mod fit;
mod report;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::metering::{ConnectionCommand, MeterState, ServiceState};
use crate::simkernel::SimTime;

pub use buffer::{evict_expired, ingest_reading, RawDataBuffer, DEFAULT_RETENTION_WINDOW_S};
pub use fit::{fit_feeder_polynomial, FitError, Normalization, PolyFit};
pub use report::{build_report, parse_fields, OperatingStateReport, RecordError, ReportWindow, REPORT_FIELDS};

pub const DEFAULT_REPORT_INTERVAL_S: SimTime = 900;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregatorError {
    #[error("meter {0} is not served by this aggregator")]
    ForeignMeter(String),
    #[error("unknown meter {0}")]
    UnknownMeter(String),
    #[error("no readings available")]
    NoData,
    #[error("report window is empty")]
    EmptyWindow,
    #[error("window ends at t={end_s} but buffer is only at t={now}")]
    WindowNotClosed { end_s: SimTime, now: SimTime },
    #[error("fit failed: {0}")]
    Fit(FitError),
}

/// Billing projection of a meter's latest reading.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeReading {
    pub serial: String,
    pub as_of_s: SimTime,
    pub cumulative_wh: f64,
}

impl CumulativeReading {
    pub const FIELDS: [&'static str; 3] = ["serial", "as_of_s", "cumulative_wh"];

    pub fn to_record(&self) -> String {
        format!(
            "serial={} as_of_s={} cumulative_wh={}",
            self.serial, self.as_of_s, self.cumulative_wh
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandAck {
    pub serial: String,
    pub service_state: ServiceState,
}

pub fn handle_passthru_read(
    buffer: &RawDataBuffer,
    serial: &str,
) -> Result<CumulativeReading, AggregatorError> {
    if !buffer.is_member(serial) {
        return Err(AggregatorError::UnknownMeter(serial.to_string()));
    }
    let latest = buffer.latest(serial).ok_or(AggregatorError::NoData)?;
    Ok(CumulativeReading {
        serial: latest.serial.clone(),
        as_of_s: latest.timestamp_s,
        cumulative_wh: latest.cumulative_wh,
    })
}

/// One Aggregator node: its buffer plus the local grid model it needs to
/// place readings (meter distances) and scale currents (nominal voltage).
#[derive(Debug, Clone)]
pub struct Aggregator {
    id: String,
    buffer: RawDataBuffer,
    positions: BTreeMap<String, f64>,
    nominal_voltage_v: f64,
}

impl Aggregator {
    pub fn new(
        id: impl Into<String>,
        positions: BTreeMap<String, f64>,
        nominal_voltage_v: f64,
        retention_window_s: SimTime,
    ) -> Self {
        let buffer = RawDataBuffer::new(positions.keys().cloned(), retention_window_s);
        Self {
            id: id.into(),
            buffer,
            positions,
            nominal_voltage_v,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn buffer(&self) -> &RawDataBuffer {
        &self.buffer
    }

    pub fn buffer_mut(&mut self) -> &mut RawDataBuffer {
        &mut self.buffer
    }

    pub fn positions(&self) -> &BTreeMap<String, f64> {
        &self.positions
    }

    pub fn meter_count(&self) -> usize {
        self.positions.len()
    }

    pub fn serves(&self, serial: &str) -> bool {
        self.positions.contains_key(serial)
    }

    pub fn check_member(&self, serial: &str) -> Result<(), AggregatorError> {
        if self.serves(serial) {
            Ok(())
        } else {
            Err(AggregatorError::UnknownMeter(serial.to_string()))
        }
    }

    /// Evict at `now` and characterize `window`.
    pub fn report(
        &mut self,
        window: ReportWindow,
        now: SimTime,
    ) -> Result<OperatingStateReport, AggregatorError> {
        self.buffer.evict_expired(now);
        build_report(
            &self.buffer,
            window,
            &self.positions,
            &self.id,
            self.nominal_voltage_v,
        )
    }

    pub fn passthru_read(&self, serial: &str) -> Result<CumulativeReading, AggregatorError> {
        handle_passthru_read(&self.buffer, serial)
    }
}

/// Forward a connection command to a meter of this Aggregator's group.
pub fn handle_connect_command(
    aggregator: &Aggregator,
    meter: &mut MeterState,
    command: ConnectionCommand,
) -> Result<CommandAck, AggregatorError> {
    aggregator.check_member(meter.serial())?;
    let service_state = meter.apply(command);
    Ok(CommandAck {
        serial: meter.serial().to_string(),
        service_state,
    })
}
