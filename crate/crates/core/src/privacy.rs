//! Privacy and data-reduction audits.
//!
//! * [`audit_report`] checks a serialized report for meter serials and for
//!   anything shaped like a per-meter series.
//! * [`reduction_factor`] compares raw scalar volume against what was sent
//!   upstream.
//! * [`reconstruction_ambiguity`] measures how many distinct, physically
//!   valid load vectors reproduce a given report. The map from loads to a
//!   report sends `N` unknowns to four observed numbers
//!   (`c0, c1, c2, total_load_w`), so for `N > 4` every report has a whole
//!   affine family of pre-images; the Monte Carlo makes that concrete.
//! * [`buffer_exposure_window`] reports how much raw history an intruder
//!   could find in an Aggregator.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aggregator::{
    fit_feeder_polynomial, parse_fields, OperatingStateReport, RawDataBuffer, RecordError, REPORT_FIELDS,
};
use crate::feeder::{solve_voltage_profile, voltages_unchecked, FeederError, FeederTopology, LoadVector};
use crate::metering::MeterReading;
use crate::simkernel::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("malformed report record: {0}")]
    MalformedRecord(#[from] RecordError),
    #[error("report has no fit (degraded group)")]
    DegradedReport,
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("report covers {report} meters but the feeder has {topology} houses")]
    TopologyMismatch { report: usize, topology: usize },
    #[error("no raw readings or no reports in the window")]
    EmptyWindow,
    #[error(transparent)]
    Feeder(#[from] FeederError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// A known meter serial appears in the record.
    SerialLeak,
    /// A field carries a list of values.
    PerMeterSequence,
    /// A field outside the report schema.
    UnexpectedField,
    /// The same field appears more than once.
    RepeatedField,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditResult {
    pub window_end_s: Option<SimTime>,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl AuditResult {
    /// `window_end_s,passed,violation_count`
    pub fn to_csv_line(&self) -> String {
        let end = self
            .window_end_s
            .map(|t| t.to_string())
            .unwrap_or_default();
        format!("{end},{},{}", self.passed, self.violations.len())
    }
}

pub const AUDIT_CSV_HEADER: &str = "window_end_s,passed,violation_count";

fn looks_like_sequence(value: &str) -> bool {
    value.contains([',', ';', '[', ']', '|'])
}

pub fn audit_report(record: &str, known_serials: &BTreeSet<String>) -> Result<AuditResult, PrivacyError> {
    let fields = parse_fields(record)?;
    let mut seen = BTreeSet::new();
    let mut violations = Vec::new();
    for &(key, value) in &fields {
        let flag = |kind| Violation {
            field: key.to_string(),
            kind,
        };
        if known_serials
            .iter()
            .any(|s| key.contains(s.as_str()) || value.contains(s.as_str()))
        {
            violations.push(flag(ViolationKind::SerialLeak));
        }
        if looks_like_sequence(value) {
            violations.push(flag(ViolationKind::PerMeterSequence));
        } else if !REPORT_FIELDS.contains(&key) {
            violations.push(flag(ViolationKind::UnexpectedField));
        }
        if !seen.insert(key) {
            violations.push(flag(ViolationKind::RepeatedField));
        }
    }
    if let Some(missing) = REPORT_FIELDS.iter().find(|f| !seen.contains(*f)) {
        return Err(RecordError::MissingField(missing).into());
    }
    let window_end_s = fields
        .iter()
        .find(|(k, _)| *k == "window_end_s")
        .and_then(|(_, v)| v.parse().ok());
    Ok(AuditResult {
        window_end_s,
        passed: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionMode {
    Values,
    Bytes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionStats {
    pub mode: ReductionMode,
    pub raw_values_count: u64,
    pub report_values_count: u64,
    pub reduction_factor: f64,
}

/// Scalar-value reduction for `raw_readings` meter readings summarized by
/// `reports` operating-state reports.
pub fn reduction_factor(raw_readings: u64, reports: u64) -> Result<ReductionStats, PrivacyError> {
    if raw_readings == 0 || reports == 0 {
        return Err(PrivacyError::EmptyWindow);
    }
    let raw = raw_readings * MeterReading::SCALAR_FIELDS as u64;
    let sent = reports * OperatingStateReport::SCALAR_VALUES as u64;
    Ok(ReductionStats {
        mode: ReductionMode::Values,
        raw_values_count: raw,
        report_values_count: sent,
        reduction_factor: raw as f64 / sent as f64,
    })
}

/// Byte-count variant over the documented record encodings.
pub fn reduction_bytes(raw_bytes: u64, report_bytes: u64) -> Result<ReductionStats, PrivacyError> {
    if raw_bytes == 0 || report_bytes == 0 {
        return Err(PrivacyError::EmptyWindow);
    }
    Ok(ReductionStats {
        mode: ReductionMode::Bytes,
        raw_values_count: raw_bytes,
        report_values_count: report_bytes,
        reduction_factor: raw_bytes as f64 / report_bytes as f64,
    })
}

pub fn buffer_exposure_window(buffer: &RawDataBuffer) -> SimTime {
    buffer.exposure_window_s()
}

/// Report-space closeness used to call two load vectors indistinguishable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbiguityTolerance {
    /// Absolute bound on each normalized fit coefficient, volts.
    pub coefficient_abs: f64,
    /// Relative bound on total load.
    pub total_rel: f64,
}

impl Default for AmbiguityTolerance {
    fn default() -> Self {
        Self {
            coefficient_abs: 1e-3,
            total_rel: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityResult {
    pub trials: usize,
    pub indistinguishable_count: usize,
    pub tolerance: AmbiguityTolerance,
    /// The report has at least as many observed numbers as there are meters,
    /// so the pre-image is (at most) a single point.
    pub low_dimension: bool,
}

impl AmbiguityResult {
    /// `trials,indistinguishable,tolerance`
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{}",
            self.trials, self.indistinguishable_count, self.tolerance.coefficient_abs
        )
    }
}

pub const AMBIGUITY_CSV_HEADER: &str = "trials,indistinguishable,tolerance";

/// One Monte Carlo trial of [`reconstruction_ambiguity`].
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageTrial {
    pub loads_w: Vec<f64>,
    /// Every load non-negative.
    pub feasible: bool,
    /// The forward pipeline reproduces the report within tolerance.
    pub matches_report: bool,
    /// Differs from the reference pre-image by more than 1% of the mean load.
    pub distinct: bool,
}

impl PreimageTrial {
    pub fn indistinguishable(&self) -> bool {
        self.feasible && self.matches_report && self.distinct
    }
}

const OBSERVED: usize = 4;
const STEPS_PER_TRIAL: usize = 3;

/// The report features a load vector produces on `topology`:
/// `[c0, c1, c2, total_load_w]`.
pub fn forward_features(topology: &FeederTopology, loads_w: &[f64]) -> Result<[f64; OBSERVED], PrivacyError> {
    let loads = LoadVector::new(loads_w.to_vec())?;
    let profile = solve_voltage_profile(topology, &loads)?;
    let samples: Vec<(f64, f64)> = profile.samples().collect();
    let fit = fit_feeder_polynomial(&samples).map_err(|_| PrivacyError::DegradedReport)?;
    let [c0, c1, c2] = fit.coefficients;
    Ok([c0, c1, c2, loads.total_w()])
}

/// Forward map without the non-negativity check, used for the linearization
/// and for corrected candidates that may dip below zero.
fn forward_unchecked(topology: &FeederTopology, loads_w: &[f64]) -> [f64; OBSERVED] {
    let samples: Vec<(f64, f64)> = topology
        .distances_m()
        .into_iter()
        .zip(voltages_unchecked(topology, loads_w))
        .collect();
    let fit = fit_feeder_polynomial(&samples).expect("feeder has >= 3 houses");
    let [c0, c1, c2] = fit.coefficients;
    [c0, c1, c2, loads_w.iter().sum()]
}

fn within(tol: &AmbiguityTolerance, got: &[f64; OBSERVED], want: &[f64; OBSERVED]) -> bool {
    (0..3).all(|i| (got[i] - want[i]).abs() <= tol.coefficient_abs)
        && (got[3] - want[3]).abs() <= tol.total_rel * want[3].abs()
}

/// Draw `trials` load vectors from the non-negative pre-image of `report`
/// and check each through the full solve -> fit -> report pipeline.
///
/// A reference pre-image is found by pulling the uniform load vector (or,
/// failing that, random draws) onto the report; a hit-and-run walk along
/// directions the report cannot see then produces the samples.
pub fn sample_preimages(
    report: &OperatingStateReport,
    topology: &FeederTopology,
    trials: usize,
    seed: u64,
    tolerance: AmbiguityTolerance,
) -> Result<Vec<PreimageTrial>, PrivacyError> {
    if trials == 0 {
        return Err(PrivacyError::ZeroTrials);
    }
    let fit = report.fit.as_ref().ok_or(PrivacyError::DegradedReport)?;
    let n = topology.house_count();
    if report.meter_count != n {
        return Err(PrivacyError::TopologyMismatch {
            report: report.meter_count,
            topology: n,
        });
    }
    let [c0, c1, c2] = fit.coefficients;
    let target = [c0, c1, c2, report.total_load_w];
    let mean_load = if report.total_load_w > 0.0 {
        report.total_load_w / n as f64
    } else {
        1000.0
    };

    // The map is affine in the loads: F(x) = F(0) + J x. Scale each row by
    // its tolerance so the pseudo-inverse balances volts against watts.
    let weights = [
        1.0 / tolerance.coefficient_abs,
        1.0 / tolerance.coefficient_abs,
        1.0 / tolerance.coefficient_abs,
        1.0 / (tolerance.total_rel * report.total_load_w.abs().max(1.0)),
    ];
    let base = forward_unchecked(topology, &vec![0.0; n]);
    let mut jac = DMatrix::<f64>::zeros(OBSERVED, n);
    let mut probe = vec![0.0; n];
    for j in 0..n {
        probe[j] = mean_load;
        let f = forward_unchecked(topology, &probe);
        probe[j] = 0.0;
        for i in 0..OBSERVED {
            jac[(i, j)] = weights[i] * (f[i] - base[i]) / mean_load;
        }
    }
    let svd = jac.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let pinv = svd
        .pseudo_inverse(1e-10 * sigma_max)
        .expect("svd computed with u and v");

    let scaled_residual = |f: &[f64; OBSERVED]| {
        DVector::from_iterator(OBSERVED, (0..OBSERVED).map(|i| weights[i] * (target[i] - f[i])))
    };
    // Directions that leave every observed number unchanged.
    let null = DMatrix::<f64>::identity(n, n) - &pinv * &jac;
    let project = |mut x: DVector<f64>| {
        // The second pass only mops up rounding.
        for _ in 0..2 {
            let f = forward_unchecked(topology, x.as_slice());
            x += &pinv * scaled_residual(&f);
        }
        x
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = project(DVector::from_element(n, mean_load));
    for _ in 0..trials {
        if start.min() >= 0.0 {
            break;
        }
        start = project(DVector::from_fn(n, |_, _| rng.gen_range(0.0..=2.0 * mean_load)));
    }
    let start_feasible = start.min() >= 0.0;

    // Hit-and-run inside {x >= 0} along null directions.
    let mut x = start.clone();
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        if start_feasible {
            for _ in 0..STEPS_PER_TRIAL {
                let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let d = &null * z;
                if d.amax() <= 1e-9 * mean_load {
                    break;
                }
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for (xi, di) in x.iter().zip(d.iter()) {
                    if *di > 0.0 {
                        lo = lo.max(-xi / di);
                    } else if *di < 0.0 {
                        hi = hi.min(-xi / di);
                    }
                }
                if lo < hi {
                    x += d * rng.gen_range(lo..=hi);
                    x.apply(|w| *w = w.max(0.0));
                }
            }
        }
        let loads_w: Vec<f64> = x.iter().copied().collect();
        let feasible = loads_w.iter().all(|&w| w >= 0.0);
        let matches_report = feasible
            && forward_features(topology, &loads_w)
                .map(|f| within(&tolerance, &f, &target))
                .unwrap_or(false);
        let distinct = (&x - &start).amax() > 0.01 * mean_load;
        out.push(PreimageTrial {
            loads_w,
            feasible,
            matches_report,
            distinct,
        });
    }
    Ok(out)
}

pub fn reconstruction_ambiguity(
    report: &OperatingStateReport,
    topology: &FeederTopology,
    trials: usize,
    seed: u64,
) -> Result<AmbiguityResult, PrivacyError> {
    let tolerance = AmbiguityTolerance::default();
    let samples = sample_preimages(report, topology, trials, seed, tolerance)?;
    Ok(AmbiguityResult {
        trials,
        indistinguishable_count: samples.iter().filter(|s| s.indistinguishable()).count(),
        tolerance,
        low_dimension: report.meter_count <= OBSERVED,
    })
}
