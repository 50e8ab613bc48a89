//! Degree-2 least-squares characterization of a voltage-vs-distance profile.
//!
//! Distances are mapped onto `[-1, 1]` (center at mid-span, scale at half the
//! span) before fitting, and the design matrix `[1, x, x^2]` is reduced with
//! Householder reflections rather than normal equations.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 distinct distances, got {distinct}")]
    InsufficientData { distinct: usize },
    #[error("distance {distance_m} m is outside the fitted span [{min_m}, {max_m}]")]
    Extrapolation {
        distance_m: f64,
        min_m: f64,
        max_m: f64,
    },
    #[error("non-finite sample")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center_m: f64,
    pub scale_m: f64,
}

impl Normalization {
    pub fn to_unit(&self, distance_m: f64) -> f64 {
        (distance_m - self.center_m) / self.scale_m
    }

    pub fn span_m(&self) -> (f64, f64) {
        (self.center_m - self.scale_m, self.center_m + self.scale_m)
    }
}

/// `V(x) = c0 + c1 x + c2 x^2` with `x = (d - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyFit {
    pub coefficients: [f64; 3],
    pub r_squared: f64,
    pub normalization: Normalization,
}

// Slack on the span check so the end points survive a round trip through
// the normalized frame.
const SPAN_EPS: f64 = 1e-9;

impl PolyFit {
    pub fn evaluate_unit(&self, x: f64) -> f64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + x * (c1 + x * c2)
    }

    pub fn evaluate(&self, distance_m: f64) -> Result<f64, FitError> {
        let x = self.normalization.to_unit(distance_m);
        if x.is_nan() || x.abs() > 1.0 + SPAN_EPS {
            let (min_m, max_m) = self.normalization.span_m();
            return Err(FitError::Extrapolation {
                distance_m,
                min_m,
                max_m,
            });
        }
        Ok(self.evaluate_unit(x))
    }

    /// Coefficients `[a0, a1, a2]` of the same polynomial in raw meters.
    pub fn denormalized(&self) -> [f64; 3] {
        let [c0, c1, c2] = self.coefficients;
        let Normalization {
            center_m: m,
            scale_m: s,
        } = self.normalization;
        [
            c0 - c1 * m / s + c2 * m * m / (s * s),
            c1 / s - 2.0 * c2 * m / (s * s),
            c2 / (s * s),
        ]
    }
}

pub fn fit_feeder_polynomial(samples: &[(f64, f64)]) -> Result<PolyFit, FitError> {
    if samples
        .iter()
        .any(|(d, v)| !d.is_finite() || !v.is_finite())
    {
        return Err(FitError::NonFinite);
    }
    let mut distances: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distances.sort_by(f64::total_cmp);
    distances.dedup();
    if distances.len() < 3 {
        return Err(FitError::InsufficientData {
            distinct: distances.len(),
        });
    }
    let (lo, hi) = (distances[0], distances[distances.len() - 1]);
    let normalization = Normalization {
        center_m: 0.5 * (lo + hi),
        scale_m: 0.5 * (hi - lo),
    };

    let mut rows: Vec<[f64; 3]> = samples
        .iter()
        .map(|&(d, _)| {
            let x = normalization.to_unit(d);
            [1.0, x, x * x]
        })
        .collect();
    let mut rhs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let coefficients = householder_solve(&mut rows, &mut rhs);

    let fit = PolyFit {
        coefficients,
        r_squared: 0.0,
        normalization,
    };
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(d, v) in samples {
        let resid = v - fit.evaluate_unit(normalization.to_unit(d));
        ss_res += resid * resid;
        ss_tot += (v - mean) * (v - mean);
    }
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PolyFit { r_squared, ..fit })
}

/// Solve `min |A c - b|` for a full-rank n x 3 `A` by Householder QR.
/// Both arguments are overwritten.
#[allow(clippy::needless_range_loop)]
fn householder_solve(a: &mut [[f64; 3]], b: &mut [f64]) -> [f64; 3] {
    let n = a.len();
    for j in 0..3 {
        let norm = a[j..].iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j..].iter().map(|r| r[j]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        for col in j..3 {
            let dot: f64 = (j..n).map(|i| v[i - j] * a[i][col]).sum();
            let f = 2.0 * dot / vtv;
            for i in j..n {
                a[i][col] -= f * v[i - j];
            }
        }
        let dot: f64 = (j..n).map(|i| v[i - j] * b[i]).sum();
        let f = 2.0 * dot / vtv;
        for i in j..n {
            b[i] -= f * v[i - j];
        }
    }
    let mut c = [0.0; 3];
    for j in (0..3).rev() {
        let tail: f64 = (j + 1..3).map(|k| a[j][k] * c[k]).sum();
        c[j] = (b[j] - tail) / a[j][j];
    }
    c
}
