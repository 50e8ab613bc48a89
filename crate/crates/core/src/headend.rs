//! Utility head-end: whole-grid state from Aggregator reports, and a
//! seasonal-naive load forecaster over the resulting history.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::aggregator::{AggregatorError, OperatingStateReport};
use crate::simkernel::SimTime;

pub const SECONDS_PER_DAY: SimTime = 86_400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeadendError {
    #[error("unknown aggregator {0}")]
    UnknownAggregator(String),
    #[error("state history is empty")]
    EmptyHistory,
    #[error("history entry at t={0} does not follow the previous entry")]
    NonIncreasing(SimTime),
    #[error("bad history record on line {line}: {reason}")]
    BadHistoryRecord { line: usize, reason: String },
    #[error(transparent)]
    Aggregator(#[from] AggregatorError),
    #[error("no response for request {0}")]
    NoResponse(u64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WholeGridState {
    pub as_of_s: SimTime,
    reports: BTreeMap<String, OperatingStateReport>,
    pub grid_total_load_w: f64,
}

impl WholeGridState {
    pub fn aggregator_count(&self) -> usize {
        self.reports.len()
    }

    pub fn reports(&self) -> impl Iterator<Item = &OperatingStateReport> {
        self.reports.values()
    }

    pub fn report(&self, aggregator_id: &str) -> Option<&OperatingStateReport> {
        self.reports.get(aggregator_id)
    }

    /// Hold `report` unless a report with a later window is already held.
    pub fn apply(&mut self, report: OperatingStateReport) {
        match self.reports.get(&report.aggregator_id) {
            Some(held) if held.window.end_s > report.window.end_s => {}
            _ => {
                self.reports.insert(report.aggregator_id.clone(), report);
                self.grid_total_load_w = self.reports.values().map(|r| r.total_load_w).sum();
            }
        }
    }

    /// Serialized form: one report record per aggregator followed by a summary line.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for r in self.reports.values() {
            out.push_str(&r.to_record());
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "as_of_s={} aggregator_count={} grid_total_load_w={}",
            self.as_of_s,
            self.aggregator_count(),
            self.grid_total_load_w
        );
        out
    }
}

pub fn assemble_grid_state<I>(reports: I, as_of_s: SimTime) -> WholeGridState
where
    I: IntoIterator<Item = OperatingStateReport>,
{
    let mut state = WholeGridState {
        as_of_s,
        ..WholeGridState::default()
    };
    for r in reports {
        state.apply(r);
    }
    state
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub window_end_s: SimTime,
    pub grid_total_load_w: f64,
}

impl HistoryEntry {
    /// Hour of day, with simulated time zero at midnight.
    pub fn hour_of_day(&self) -> u32 {
        ((self.window_end_s % SECONDS_PER_DAY) / 3600) as u32
    }

    /// Day of week, 0 = the day the simulation starts.
    pub fn day_of_week(&self) -> u32 {
        ((self.window_end_s / SECONDS_PER_DAY) % 7) as u32
    }
}

/// Time-ordered grid totals, one per report window end.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateHistory {
    entries: Vec<HistoryEntry>,
}

impl StateHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, window_end_s: SimTime, grid_total_load_w: f64) -> Result<(), HeadendError> {
        if self.entries.last().is_some_and(|e| e.window_end_s >= window_end_s) {
            return Err(HeadendError::NonIncreasing(window_end_s));
        }
        self.entries.push(HistoryEntry {
            window_end_s,
            grid_total_load_w,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn at(&self, window_end_s: SimTime) -> Option<f64> {
        self.entries
            .binary_search_by_key(&window_end_s, |e| e.window_end_s)
            .ok()
            .map(|i| self.entries[i].grid_total_load_w)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_end_s,grid_total_load_w\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{}", e.window_end_s, e.grid_total_load_w);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, HeadendError> {
        let mut history = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("window_end_s")) {
                continue;
            }
            let bad = |reason: &str| HeadendError::BadHistoryRecord {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (t, w) = line.split_once(',').ok_or_else(|| bad("expected two columns"))?;
            let t = t.parse().map_err(|_| bad("bad window_end_s"))?;
            let w = w.parse().map_err(|_| bad("bad grid_total_load_w"))?;
            history.push(t, w)?;
        }
        Ok(history)
    }
}

/// Seasonal-naive forecast for `horizon_s` after the last observation: the
/// load observed exactly one day before the target, else the last observation.
pub fn forecast_load(history: &StateHistory, horizon_s: SimTime) -> Result<f64, HeadendError> {
    let last = history.entries.last().ok_or(HeadendError::EmptyHistory)?;
    let target = last.window_end_s + horizon_s;
    Ok(target
        .checked_sub(SECONDS_PER_DAY)
        .and_then(|t| history.at(t))
        .unwrap_or(last.grid_total_load_w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregator::ReportWindow;

    fn report(id: &str, end: SimTime, load: f64) -> OperatingStateReport {
        OperatingStateReport {
            aggregator_id: id.into(),
            window: ReportWindow::new(end - 900, end),
            total_load_w: load,
            ..OperatingStateReport::fixture()
        }
    }

    #[test]
    fn totals_sum_across_aggregators() {
        let s = assemble_grid_state([report("A1", 900, 1.0e6), report("A2", 900, 0.5e6)], 900);
        assert_eq!(s.grid_total_load_w, 1.5e6);
        assert_eq!(s.aggregator_count(), 2);
    }

    #[test]
    fn empty_state() {
        let s = assemble_grid_state(Vec::new(), 0);
        assert_eq!(s.grid_total_load_w, 0.0);
        assert_eq!(s.aggregator_count(), 0);
    }

    #[test]
    fn latest_window_wins() {
        for order in [[900, 1800], [1800, 900]] {
            let s = assemble_grid_state(order.map(|t| report("A1", t, t as f64)), 1800);
            assert_eq!(s.aggregator_count(), 1);
            assert_eq!(s.report("A1").unwrap().window.end_s, 1800);
            assert_eq!(s.grid_total_load_w, 1800.0);
        }
    }

    #[test]
    fn history_must_increase() {
        let mut h = StateHistory::new();
        h.push(900, 1.0).unwrap();
        assert_eq!(h.push(900, 1.0), Err(HeadendError::NonIncreasing(900)));
    }

    #[test]
    fn forecast_constant_series() {
        let mut h = StateHistory::new();
        for k in 1..=10 {
            h.push(k * 900, 1.0e6).unwrap();
        }
        assert_eq!(forecast_load(&h, 900).unwrap(), 1.0e6);
        assert_eq!(forecast_load(&StateHistory::new(), 900), Err(HeadendError::EmptyHistory));
    }

    #[test]
    fn forecast_repeats_yesterday() {
        let daily = |t: SimTime| {
            1.0e6 + 2.0e5 * (2.0 * std::f64::consts::PI * (t % SECONDS_PER_DAY) as f64 / 86_400.0).sin()
        };
        let mut h = StateHistory::new();
        for k in 1..=(48 * 4) {
            let t = k * 900;
            h.push(t, daily(t)).unwrap();
        }
        let last = h.entries().last().unwrap().window_end_s;
        for hour in 1..=24 {
            let horizon = hour * 3600;
            let target = last + horizon;
            let yesterday = h.at(target - SECONDS_PER_DAY).unwrap();
            assert_eq!(forecast_load(&h, horizon).unwrap(), yesterday);
        }
    }

    #[test]
    fn forecast_falls_back_to_last() {
        let mut h = StateHistory::new();
        h.push(900, 5.0).unwrap();
        h.push(1800, 7.0).unwrap();
        assert_eq!(forecast_load(&h, 3600).unwrap(), 7.0);
    }

    #[test]
    fn history_csv_round_trip_and_tags() {
        let mut h = StateHistory::new();
        h.push(3600, 1.5).unwrap();
        h.push(SECONDS_PER_DAY + 7200, 2.5).unwrap();
        let csv = h.to_csv();
        assert!(csv.starts_with("window_end_s,grid_total_load_w\n3600,1.5\n"));
        assert_eq!(StateHistory::from_csv(&csv).unwrap(), h);
        assert_eq!(h.entries()[1].hour_of_day(), 2);
        assert_eq!(h.entries()[1].day_of_week(), 1);
    }

    #[test]
    fn serialized_state_has_no_serials() {
        let s = assemble_grid_state([report("A1", 900, 1.0)], 900);
        let text = s.to_records();
        assert!(!text.contains("SN-"));
        assert!(text.ends_with("grid_total_load_w=1\n"));
    }
}
