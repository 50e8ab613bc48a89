#![allow(dead_code)]

use std::collections::BTreeMap;

use ami_core::feeder::FeederConfig;

pub fn golden(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Series-drop voltages for constant-current loads `i = p / v0`, summed
/// segment by segment from the source.
pub fn series_drop(cfg: &FeederConfig, loads_w: &[f64]) -> Vec<f64> {
    let v0 = cfg.source_voltage_v;
    let r = cfg.resistance_ohm_per_m;
    let mut downstream: f64 = loads_w.iter().map(|p| p / v0).sum();
    let mut v = v0 - r * cfg.trunk_length_m * downstream;
    let mut out = Vec::with_capacity(loads_w.len());
    for (k, p) in loads_w.iter().enumerate() {
        if k > 0 {
            v -= r * cfg.spacing_m * downstream;
        }
        out.push(v);
        downstream -= p / v0;
    }
    out
}

pub fn distances(cfg: &FeederConfig) -> Vec<f64> {
    (0..cfg.house_count)
        .map(|k| cfg.trunk_length_m + k as f64 * cfg.spacing_m)
        .collect()
}

/// Quadratic least squares on `x` scaled to [-1, 1] by midrange and
/// half-span, via the 3x3 normal equations and Cramer's rule.
/// Returns `([c0, c1, c2], r_squared)`.
pub fn normal_equation_fit(points: &[(f64, f64)]) -> ([f64; 3], f64) {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let mut s = [0.0; 5];
    let mut t = [0.0; 3];
    for &(d, v) in points {
        let x = (d - mid) / half;
        let mut xp = 1.0;
        for (i, si) in s.iter_mut().enumerate() {
            *si += xp;
            if i < 3 {
                t[i] += xp * v;
            }
            xp *= x;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let dm = det(m);
    let mut c = [0.0; 3];
    for (col, ci) in c.iter_mut().enumerate() {
        let mut a = m;
        for row in 0..3 {
            a[row][col] = t[row];
        }
        *ci = det(a) / dm;
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(d, v) in points {
        let x = (d - mid) / half;
        ss_res += (v - (c[0] + c[1] * x + c[2] * x * x)).powi(2);
        ss_tot += (v - mean).powi(2);
    }
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (c, r2)
}
