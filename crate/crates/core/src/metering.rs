//! Smart-meter emulation.
//!
//! A meter integrates energy under a piecewise-constant load: each reading at
//! time `t` credits `load * (t - last_sample)` while the service is connected.
//! Disconnecting freezes the register; reconnecting resumes from the frozen
//! value.

use thiserror::Error;

use crate::simkernel::SimTime;

pub const DEFAULT_SAMPLE_INTERVAL_S: SimTime = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceState {
    Connected,
    Disconnected,
}

impl ServiceState {
    pub fn as_str(&self) -> &'static str {
        match self {
            ServiceState::Connected => "connected",
            ServiceState::Disconnected => "disconnected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnectionCommand {
    Connect,
    Disconnect,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeteringError {
    #[error("sample at t={t} does not follow previous sample at t={last}")]
    NonMonotonicTime { t: SimTime, last: SimTime },
    #[error("sample interval must be at least one second")]
    InvalidInterval,
    #[error("bus voltage {0} V is not positive")]
    NonPositiveVoltage(f64),
    #[error("load {0} W is negative")]
    NegativeLoad(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeterIdentity {
    pub serial: String,
    pub house_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeterReading {
    pub serial: String,
    pub timestamp_s: SimTime,
    pub voltage_v: f64,
    pub power_w: f64,
    pub cumulative_wh: f64,
    pub service_state: ServiceState,
}

impl MeterReading {
    /// Number of non-identifier scalars a reading carries (timestamp,
    /// voltage, power, cumulative energy, service state).
    pub const SCALAR_FIELDS: usize = 5;

    /// Comma-separated wire form used to size raw traffic in bytes.
    pub fn to_record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.serial,
            self.timestamp_s,
            self.voltage_v,
            self.power_w,
            self.cumulative_wh,
            self.service_state.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeterState {
    identity: MeterIdentity,
    service_state: ServiceState,
    cumulative_wh: f64,
    last_sample_t: Option<SimTime>,
    sample_interval_s: SimTime,
}

impl MeterState {
    pub fn new(identity: MeterIdentity, sample_interval_s: SimTime) -> Result<Self, MeteringError> {
        if sample_interval_s < 1 {
            return Err(MeteringError::InvalidInterval);
        }
        Ok(Self {
            identity,
            service_state: ServiceState::Connected,
            cumulative_wh: 0.0,
            last_sample_t: None,
            sample_interval_s,
        })
    }

    pub fn identity(&self) -> &MeterIdentity {
        &self.identity
    }

    pub fn serial(&self) -> &str {
        &self.identity.serial
    }

    pub fn service_state(&self) -> ServiceState {
        self.service_state
    }

    pub fn cumulative_wh(&self) -> f64 {
        self.cumulative_wh
    }

    pub fn last_sample_t(&self) -> Option<SimTime> {
        self.last_sample_t
    }

    pub fn sample_interval_s(&self) -> SimTime {
        self.sample_interval_s
    }

    /// Power this house actually draws given its demand.
    pub fn drawn_load_w(&self, demand_w: f64) -> f64 {
        match self.service_state {
            ServiceState::Connected => demand_w,
            ServiceState::Disconnected => 0.0,
        }
    }

    /// Take a reading at `t`. The first reading only establishes the time base.
    pub fn read(
        &mut self,
        bus_voltage_v: f64,
        load_w: f64,
        t: SimTime,
    ) -> Result<MeterReading, MeteringError> {
        if let Some(last) = self.last_sample_t {
            if t <= last {
                return Err(MeteringError::NonMonotonicTime { t, last });
            }
        }
        if bus_voltage_v.is_nan() || bus_voltage_v <= 0.0 {
            return Err(MeteringError::NonPositiveVoltage(bus_voltage_v));
        }
        if load_w.is_nan() || load_w < 0.0 {
            return Err(MeteringError::NegativeLoad(load_w));
        }
        let power_w = self.drawn_load_w(load_w);
        if let Some(last) = self.last_sample_t {
            self.cumulative_wh += power_w * (t - last) as f64 / 3600.0;
        }
        self.last_sample_t = Some(t);
        Ok(MeterReading {
            serial: self.identity.serial.clone(),
            timestamp_s: t,
            voltage_v: bus_voltage_v,
            power_w,
            cumulative_wh: self.cumulative_wh,
            service_state: self.service_state,
        })
    }

    pub fn apply(&mut self, command: ConnectionCommand) -> ServiceState {
        self.service_state = match command {
            ConnectionCommand::Connect => ServiceState::Connected,
            ConnectionCommand::Disconnect => ServiceState::Disconnected,
        };
        self.service_state
    }
}

pub fn read_meter(
    state: &mut MeterState,
    bus_voltage_v: f64,
    load_w: f64,
    t: SimTime,
) -> Result<MeterReading, MeteringError> {
    state.read(bus_voltage_v, load_w, t)
}

pub fn apply_connection_command(state: &mut MeterState, command: ConnectionCommand) -> ServiceState {
    state.apply(command)
}
