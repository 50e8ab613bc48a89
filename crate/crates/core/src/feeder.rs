//! Radial feeder subsection model.
//!
//! A single-phase trunk runs from the grid connection to the first house and
//! continues past every further house at a fixed spacing. Houses draw a
//! constant current `I = P / V_nom`, so the profile is linear in the loads and
//! the drop at house `k` is the sum of `length * r * downstream current` over
//! every segment between the source and `k`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aggregator::{FitError, PolyFit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeederError {
    #[error("feeder has no houses")]
    EmptyFeeder,
    #[error("invalid dimension: {0}")]
    InvalidDimension(&'static str),
    #[error("invalid load model: {0}")]
    InvalidLoadModel(&'static str),
    #[error("load vector has {got} entries, feeder has {expected} houses")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative load {watts} W at house {house}")]
    NegativeLoad { house: usize, watts: f64 },
}

/// The neighborhood the default conductor resistance is calibrated against:
/// 100 houses on 240 V, a 500 m trunk, 50 m between houses and a 15 V drop
/// to the last house when every house draws 10 kW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    pub source_voltage_v: f64,
    pub trunk_length_m: f64,
    pub spacing_m: f64,
    pub house_count: usize,
    pub load_w: f64,
    pub end_drop_v: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self {
            source_voltage_v: 240.0,
            trunk_length_m: 500.0,
            spacing_m: 50.0,
            house_count: 100,
            load_w: 10_000.0,
            end_drop_v: 15.0,
        }
    }
}

/// Resistance per meter that produces `target.end_drop_v` at the last house
/// under uniform loading: `drop = r * I * (trunk * N + spacing * sum_{j=1}^{N-1} (N - j))`.
pub fn calibrated_resistance(target: &CalibrationTarget) -> f64 {
    let n = target.house_count as f64;
    let current = target.load_w / target.source_voltage_v;
    let weighted_length = target.trunk_length_m * n + target.spacing_m * n * (n - 1.0) / 2.0;
    target.end_drop_v / (current * weighted_length)
}

pub fn default_resistance_ohm_per_m() -> f64 {
    calibrated_resistance(&CalibrationTarget::default())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeederConfig {
    pub source_voltage_v: f64,
    pub trunk_length_m: f64,
    pub spacing_m: f64,
    pub house_count: usize,
    pub resistance_ohm_per_m: f64,
}

impl Default for FeederConfig {
    fn default() -> Self {
        let target = CalibrationTarget::default();
        Self {
            source_voltage_v: target.source_voltage_v,
            trunk_length_m: target.trunk_length_m,
            spacing_m: target.spacing_m,
            house_count: target.house_count,
            resistance_ohm_per_m: default_resistance_ohm_per_m(),
        }
    }
}

/// A validated feeder. Houses are numbered from 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederTopology {
    config: FeederConfig,
}

pub fn build_feeder(config: FeederConfig) -> Result<FeederTopology, FeederError> {
    if config.house_count == 0 {
        return Err(FeederError::EmptyFeeder);
    }
    if !(config.source_voltage_v > 0.0 && config.source_voltage_v.is_finite()) {
        return Err(FeederError::InvalidDimension("source voltage must be positive"));
    }
    if !(config.trunk_length_m >= 0.0 && config.trunk_length_m.is_finite()) {
        return Err(FeederError::InvalidDimension("trunk length must be non-negative"));
    }
    if !(config.spacing_m > 0.0 && config.spacing_m.is_finite()) {
        return Err(FeederError::InvalidDimension("house spacing must be positive"));
    }
    if !(config.resistance_ohm_per_m > 0.0 && config.resistance_ohm_per_m.is_finite()) {
        return Err(FeederError::InvalidDimension("resistance must be positive"));
    }
    Ok(FeederTopology { config })
}

impl FeederTopology {
    pub fn config(&self) -> &FeederConfig {
        &self.config
    }

    pub fn house_count(&self) -> usize {
        self.config.house_count
    }

    pub fn source_voltage_v(&self) -> f64 {
        self.config.source_voltage_v
    }

    /// Distance from the grid connection to house `k` (1-based).
    pub fn distance_m(&self, house: usize) -> f64 {
        debug_assert!(house >= 1 && house <= self.config.house_count);
        self.config.trunk_length_m + (house - 1) as f64 * self.config.spacing_m
    }

    pub fn distances_m(&self) -> Vec<f64> {
        (1..=self.config.house_count)
            .map(|k| self.distance_m(k))
            .collect()
    }

    /// Length of the segment ending at house `k`.
    fn segment_length_m(&self, house: usize) -> f64 {
        if house == 1 {
            self.config.trunk_length_m
        } else {
            self.config.spacing_m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadModel {
    Fixed { watts: f64 },
    Uniform { min_w: f64, max_w: f64 },
}

impl LoadModel {
    pub fn validate(&self) -> Result<(), FeederError> {
        match *self {
            LoadModel::Fixed { watts } if !(watts >= 0.0 && watts.is_finite()) => {
                Err(FeederError::InvalidLoadModel("fixed load must be non-negative"))
            }
            LoadModel::Uniform { min_w, max_w }
                if !(min_w >= 0.0 && min_w <= max_w && max_w.is_finite()) =>
            {
                Err(FeederError::InvalidLoadModel(
                    "uniform bounds must satisfy 0 <= min <= max",
                ))
            }
            _ => Ok(()),
        }
    }

    /// Draw one demand per house from `rng`.
    pub fn draw<R: Rng + ?Sized>(&self, house_count: usize, rng: &mut R) -> LoadVector {
        let watts = match *self {
            LoadModel::Fixed { watts } => vec![watts; house_count],
            LoadModel::Uniform { min_w, max_w } if min_w == max_w => vec![min_w; house_count],
            LoadModel::Uniform { min_w, max_w } => (0..house_count)
                .map(|_| rng.gen_range(min_w..=max_w))
                .collect(),
        };
        LoadVector(watts)
    }
}

/// Per-house real power demand in watts, house 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector(Vec<f64>);

impl LoadVector {
    pub fn new(watts: Vec<f64>) -> Result<Self, FeederError> {
        if let Some((i, &w)) = watts
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w >= 0.0 && w.is_finite()))
        {
            return Err(FeederError::NegativeLoad {
                house: i + 1,
                watts: w,
            });
        }
        Ok(Self(watts))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_w(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn sample_loads(model: &LoadModel, house_count: usize, seed: u64) -> LoadVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.draw(house_count, &mut rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageProfile {
    pub distances_m: Vec<f64>,
    pub voltages_v: Vec<f64>,
}

impl VoltageProfile {
    pub fn len(&self) -> usize {
        self.voltages_v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages_v.is_empty()
    }

    /// Voltage at house `k` (1-based).
    pub fn voltage_at(&self, house: usize) -> f64 {
        self.voltages_v[house - 1]
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.distances_m
            .iter()
            .copied()
            .zip(self.voltages_v.iter().copied())
    }
}

pub fn solve_voltage_profile(
    topology: &FeederTopology,
    loads: &LoadVector,
) -> Result<VoltageProfile, FeederError> {
    let n = topology.house_count();
    if loads.len() != n {
        return Err(FeederError::DimensionMismatch {
            expected: n,
            got: loads.len(),
        });
    }
    Ok(VoltageProfile {
        distances_m: topology.distances_m(),
        voltages_v: voltages_unchecked(topology, loads.as_slice()),
    })
}

/// Series-drop solution for arbitrary (possibly negative) demands.
pub(crate) fn voltages_unchecked(topology: &FeederTopology, loads_w: &[f64]) -> Vec<f64> {
    let n = loads_w.len();
    let v0 = topology.source_voltage_v();
    let r = topology.config.resistance_ohm_per_m;

    // downstream[k-1] = current through the segment ending at house k.
    let mut downstream = vec![0.0; n];
    let mut acc = 0.0;
    for (k, watts) in loads_w.iter().enumerate().rev() {
        acc += watts / v0;
        downstream[k] = acc;
    }

    let mut drop = 0.0;
    (1..=n)
        .map(|k| {
            drop += topology.segment_length_m(k) * r * downstream[k - 1];
            v0 - drop
        })
        .collect()
}

/// Voltage at `distance_m` predicted by a characterizing fit.
pub fn estimate_voltage(fit: &PolyFit, distance_m: f64) -> Result<f64, FitError> {
    fit.evaluate(distance_m)
}
