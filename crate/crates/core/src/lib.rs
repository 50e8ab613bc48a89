//! Aggregator-based advanced metering infrastructure (AMI) simulator.
//!
//! Emulated smart meters sit on radial feeders and broadcast readings to
//! field Aggregators. Each Aggregator keeps a short-lived raw data buffer,
//! characterizes its grid subsection with a quadratic voltage-vs-distance
//! fit plus a handful of aggregates, and forwards only that operating-state
//! report to the utility head-end. Billing reads and connect/disconnect
//! commands travel through the Aggregator as an on-demand pass-thru.
//!
//! Module map:
//!
//! - [`simkernel`]: deterministic discrete-event scheduler and message bus.
//! - [`feeder`]: radial feeder topology, load sampling and voltage profiles.
//! - [`metering`]: smart-meter emulation and service state machine.
//! - [`aggregator`]: raw data buffer, polynomial fit, reports and pass-thru.
//! - [`headend`]: whole-grid state assembly and baseline load forecasting.
//! - [`privacy`]: report audits, reduction factors and reconstruction ambiguity.
//! - [`scenario`]: the `.scn` scenario format and the bundled scenarios.
//! - [`grid`]: wires all of the above into a runnable simulation.

pub mod aggregator;
pub mod feeder;
pub mod grid;
pub mod headend;
pub mod metering;
pub mod privacy;
pub mod rng;
pub mod scenario;
pub mod simkernel;

pub use aggregator::{
    fit_feeder_polynomial, Aggregator, AggregatorError, CommandAck, CumulativeReading,
    OperatingStateReport, PolyFit, RawDataBuffer, ReportWindow,
};
pub use feeder::{
    build_feeder, estimate_voltage, sample_loads, solve_voltage_profile, FeederConfig,
    FeederError, FeederTopology, LoadModel, LoadVector, VoltageProfile,
};
pub use grid::{GridError, GridSimulation, RunSummary};
pub use headend::{assemble_grid_state, forecast_load, HeadendError, StateHistory, WholeGridState};
pub use metering::{ConnectionCommand, MeterIdentity, MeterReading, MeterState, ServiceState};
pub use scenario::{canonical_scenarios, parse_scenario, Scenario, ScenarioError};
pub use simkernel::{LinkProfile, Message, NodeId, SimTime, Simulation};
