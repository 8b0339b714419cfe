//! Convergence-rate tables and their fits: a power law in δ(ε) and the
//! log-corrected ratio `value / (δ |log δ|)`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Exponents below this are reported as non-converging.
const NON_CONVERGING_EXPONENT: f64 = 1e-6;

/// One measurement of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub eps: f64,
    pub delta: f64,
    pub value: f64,
}

/// A `(ε, δ(ε), value)` table sorted by ε descending.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateSeries {
    pub points: Vec<RatePoint>,
}

impl RateSeries {
    /// Build a series from `(ε, value)` pairs and the perturbation size δ.
    pub fn new(values: &[(f64, f64)], delta: impl Fn(f64) -> f64) -> Self {
        let mut series = Self::default();
        for &(eps, value) in values {
            series.push(eps, delta(eps), value);
        }
        series
    }

    /// Insert a point, keeping the ε-descending order.
    pub fn push(&mut self, eps: f64, delta: f64, value: f64) {
        let at = self.points.partition_point(|p| p.eps > eps);
        self.points.insert(at, RatePoint { eps, delta, value });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Power,
    Logcorrected,
}

/// Fit summary. Both the power-law and the log-corrected statistics are
/// always computed; `mode` records which one the caller asked for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub mode: FitMode,
    /// Slope of `log value` against `log δ`.
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Extremes of `value / (δ |log δ|)`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ratio_max / ratio_min`.
    pub spread: f64,
    pub points_used: usize,
    /// ε values dropped from the fit because ε or the value is zero.
    pub excluded: Vec<f64>,
    /// Exponent indistinguishable from zero.
    pub non_converging: bool,
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept, R²)`.
/// A perfect fit (including constant data) has R² = 1.
pub fn linear_regression(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let scale = pts.iter().map(|p| p.1 * p.1).sum::<f64>().max(f64::MIN_POSITIVE);
    let r2 = if ss_res <= 1e-24 * scale || ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

/// The log-correction weight `δ |log δ|`.
pub fn log_corrected_scale(delta: f64) -> f64 {
    delta * delta.ln().abs()
}

/// Fit a series; rows with ε = 0 or value = 0 are excluded (and listed).
pub fn fit_rate(series: &RateSeries, mode: FitMode) -> Result<RateFit> {
    let mut excluded = Vec::new();
    let mut used = Vec::new();
    for p in &series.points {
        if p.eps > 0.0 && p.value > 0.0 && p.delta > 0.0 && p.delta != 1.0 {
            used.push(*p);
        } else {
            excluded.push(p.eps);
        }
    }
    if used.len() < 4 {
        return Err(LabError::InsufficientPoints(used.len()));
    }
    let logs: Vec<(f64, f64)> = used.iter().map(|p| (p.delta.ln(), p.value.ln())).collect();
    let (exponent, intercept, r_squared) = linear_regression(&logs);
    let ratios: Vec<f64> = used
        .iter()
        .map(|p| p.value / log_corrected_scale(p.delta))
        .collect();
    let ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(RateFit {
        mode,
        exponent,
        intercept,
        r_squared,
        ratio_min,
        ratio_max,
        spread: ratio_max / ratio_min,
        points_used: used.len(),
        excluded,
        non_converging: exponent.abs() < NON_CONVERGING_EXPONENT,
    })
}
