use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::simkernel::SimTime;

use super::buffer::RawDataBuffer;
use super::fit::{fit_feeder_polynomial, FitError, Normalization, PolyFit};
use super::AggregatorError;

/// Half-open reporting window `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReportWindow {
    pub start_s: SimTime,
    pub end_s: SimTime,
}

impl ReportWindow {
    pub fn new(start_s: SimTime, end_s: SimTime) -> Self {
        Self { start_s, end_s }
    }
}

/// The anonymized operating state of one grid subsection.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingStateReport {
    pub aggregator_id: String,
    pub window: ReportWindow,
    /// `None` when the group has fewer than three distinct distances.
    pub fit: Option<PolyFit>,
    pub total_load_w: f64,
    pub head_current_a: f64,
    pub meter_count: usize,
    pub voltage_min_v: f64,
    pub voltage_max_v: f64,
    pub voltage_mean_v: f64,
}

/// Record field names, in serialization order.
pub const REPORT_FIELDS: [&str; 16] = [
    "aggregator_id",
    "window_start_s",
    "window_end_s",
    "c0",
    "c1",
    "c2",
    "r2",
    "norm_mean",
    "norm_scale",
    "total_load_w",
    "head_current_a",
    "meter_count",
    "v_min",
    "v_max",
    "v_mean",
    "degraded",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("token {0:?} is not key=value")]
    BadToken(String),
    #[error("missing field {0}")]
    MissingField(&'static str),
    #[error("unknown field {0}")]
    UnknownField(String),
    #[error("duplicate field {0}")]
    DuplicateField(String),
    #[error("field {field} has invalid value {value:?}")]
    BadValue { field: String, value: String },
}

/// Split a record line into its `key=value` pairs, keeping order.
pub fn parse_fields(line: &str) -> Result<Vec<(&str, &str)>, RecordError> {
    line.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| RecordError::BadToken(tok.to_string()))
        })
        .collect()
}

impl OperatingStateReport {
    /// Scalar values a report carries upstream (every field but the id).
    pub const SCALAR_VALUES: usize = REPORT_FIELDS.len() - 1;

    pub fn is_degraded(&self) -> bool {
        self.fit.is_none()
    }

    pub fn to_record(&self) -> String {
        let (c, r2, norm) = match &self.fit {
            Some(f) => (
                f.coefficients,
                f.r_squared,
                (f.normalization.center_m, f.normalization.scale_m),
            ),
            None => ([f64::NAN; 3], f64::NAN, (f64::NAN, f64::NAN)),
        };
        let mut s = String::with_capacity(320);
        let _ = write!(
            s,
            "aggregator_id={} window_start_s={} window_end_s={} c0={} c1={} c2={} r2={} \
             norm_mean={} norm_scale={} total_load_w={} head_current_a={} meter_count={} \
             v_min={} v_max={} v_mean={} degraded={}",
            self.aggregator_id,
            self.window.start_s,
            self.window.end_s,
            c[0],
            c[1],
            c[2],
            r2,
            norm.0,
            norm.1,
            self.total_load_w,
            self.head_current_a,
            self.meter_count,
            self.voltage_min_v,
            self.voltage_max_v,
            self.voltage_mean_v,
            self.is_degraded()
        );
        s
    }

    pub fn from_record(line: &str) -> Result<Self, RecordError> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in parse_fields(line)? {
            if !REPORT_FIELDS.contains(&k) {
                return Err(RecordError::UnknownField(k.to_string()));
            }
            if map.insert(k, v).is_some() {
                return Err(RecordError::DuplicateField(k.to_string()));
            }
        }
        let raw = |name: &'static str| map.get(name).copied().ok_or(RecordError::MissingField(name));
        fn num<T: std::str::FromStr>(name: &'static str, v: &str) -> Result<T, RecordError> {
            v.parse().map_err(|_| RecordError::BadValue {
                field: name.to_string(),
                value: v.to_string(),
            })
        }
        let f = |name: &'static str| raw(name).and_then(|v| num::<f64>(name, v));

        let degraded: bool = num("degraded", raw("degraded")?)?;
        let fit = if degraded {
            None
        } else {
            Some(PolyFit {
                coefficients: [f("c0")?, f("c1")?, f("c2")?],
                r_squared: f("r2")?,
                normalization: Normalization {
                    center_m: f("norm_mean")?,
                    scale_m: f("norm_scale")?,
                },
            })
        };
        Ok(Self {
            aggregator_id: raw("aggregator_id")?.to_string(),
            window: ReportWindow {
                start_s: num("window_start_s", raw("window_start_s")?)?,
                end_s: num("window_end_s", raw("window_end_s")?)?,
            },
            fit,
            total_load_w: f("total_load_w")?,
            head_current_a: f("head_current_a")?,
            meter_count: num("meter_count", raw("meter_count")?)?,
            voltage_min_v: f("v_min")?,
            voltage_max_v: f("v_max")?,
            voltage_mean_v: f("v_mean")?,
        })
    }

    #[cfg(test)]
    pub(crate) fn fixture() -> Self {
        Self {
            aggregator_id: "A1".into(),
            window: ReportWindow::new(0, 900),
            fit: Some(PolyFit {
                coefficients: [230.0, -7.0, 1.5],
                r_squared: 0.999,
                normalization: Normalization {
                    center_m: 2975.0,
                    scale_m: 2475.0,
                },
            }),
            total_load_w: 1.0e6,
            head_current_a: 1.0e6 / 240.0,
            meter_count: 100,
            voltage_min_v: 225.0,
            voltage_max_v: 238.0,
            voltage_mean_v: 230.0,
        }
    }
}

/// Characterize the buffered window for one Aggregator.
///
/// Each meter contributes its latest reading inside `window`; the voltage
/// samples are placed at the meter's feeder distance from `positions`.
pub fn build_report(
    buffer: &RawDataBuffer,
    window: ReportWindow,
    positions: &BTreeMap<String, f64>,
    aggregator_id: &str,
    nominal_voltage_v: f64,
) -> Result<OperatingStateReport, AggregatorError> {
    if window.start_s >= window.end_s {
        return Err(AggregatorError::EmptyWindow);
    }
    if window.end_s > buffer.now() {
        return Err(AggregatorError::WindowNotClosed {
            end_s: window.end_s,
            now: buffer.now(),
        });
    }
    let mut samples = Vec::with_capacity(positions.len());
    let mut total_load_w = 0.0;
    let (mut v_min, mut v_max, mut v_sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (serial, &distance_m) in positions {
        let Some(r) = buffer.latest_in_window(serial, window.start_s, window.end_s) else {
            continue;
        };
        samples.push((distance_m, r.voltage_v));
        total_load_w += r.power_w;
        v_min = v_min.min(r.voltage_v);
        v_max = v_max.max(r.voltage_v);
        v_sum += r.voltage_v;
    }
    if samples.is_empty() {
        return Err(AggregatorError::NoData);
    }
    let fit = match fit_feeder_polynomial(&samples) {
        Ok(fit) => Some(fit),
        Err(FitError::InsufficientData { .. }) => None,
        Err(e) => return Err(AggregatorError::Fit(e)),
    };
    Ok(OperatingStateReport {
        aggregator_id: aggregator_id.to_string(),
        window,
        fit,
        total_load_w,
        head_current_a: total_load_w / nominal_voltage_v,
        meter_count: samples.len(),
        voltage_min_v: v_min,
        voltage_max_v: v_max,
        voltage_mean_v: v_sum / samples.len() as f64,
    })
}
