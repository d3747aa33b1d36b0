//! Norm time series and log-log least-squares decay fits.

use serde::{Deserialize, Serialize};

use crate::grid::DerivativeIndex;
use crate::tolerances::{MIN_FIT_DECADES_SERIES, MIN_FIT_POINTS};
use crate::{Error, Result};

/// A sampled norm t ↦ value with its tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub label: String,
    pub p: f64,
    pub q: f64,
    pub alpha: DerivativeIndex,
    pub points: Vec<(f64, f64)>,
}

impl NormSeries {
    pub fn new(label: impl Into<String>, p: f64, q: f64, alpha: DerivativeIndex) -> Self {
        NormSeries { label: label.into(), p, q, alpha, points: Vec::new() }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        self.points.push((t, v));
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Linear interpolation in log-log coordinates (plain linear if a value is 0).
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let pts = &self.points;
        let k = pts.iter().position(|p| p.0 >= t)?;
        if (pts[k].0 - t).abs() <= 1e-12 * t.abs().max(1.0) {
            return Some(pts[k].1);
        }
        if k == 0 {
            return None;
        }
        let (t0, v0) = pts[k - 1];
        let (t1, v1) = pts[k];
        if v0 > 0.0 && v1 > 0.0 && t0 > 0.0 {
            let s = (t / t0).ln() / (t1 / t0).ln();
            Some((v0.ln() + s * (v1 / v0).ln()).exp())
        } else {
            Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
        }
    }

    /// Multiply every value by t^r.
    pub fn normalized(&self, r: f64) -> NormSeries {
        let mut s = self.clone();
        for p in s.points.iter_mut() {
            p.1 *= p.0.powf(r);
        }
        s
    }
}

/// Fitted power-law exponent with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub exponent: f64,
    pub stderr: f64,
}

/// Ordinary least squares of log v against log t.
pub fn loglog_fit(ts: &[f64], vs: &[f64]) -> Result<Fit> {
    if ts.len() != vs.len() || ts.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} points", ts.len())));
    }
    if let Some(v) = vs.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit(format!("non-positive value {v}")));
    }
    if ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::DegenerateFit("non-positive time".into()));
    }
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all times equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(Fit { exponent: slope, stderr })
}

/// Fit the decay exponent of `series` over `window` = (t_lo, t_hi).
/// With `log_mode`, the fitted quantity is value / log(2 + t).
pub fn fit_decay_rate(series: &NormSeries, window: (f64, f64), log_mode: bool) -> Result<Fit> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .copied()
        .filter(|(t, _)| *t >= lo * (1.0 - 1e-12) && *t <= hi * (1.0 + 1e-12))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!("{} points in window [{lo}, {hi}], need {MIN_FIT_POINTS}", pts.len())));
    }
    let span = (pts.last().unwrap().0 / pts[0].0).log10();
    if span < MIN_FIT_DECADES_SERIES - 1e-9 {
        return Err(Error::DegenerateFit(format!("window spans {span:.2} decades, need {MIN_FIT_DECADES_SERIES}")));
    }
    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = pts.iter().map(|&(t, v)| if log_mode { v / (2.0 + t).ln() } else { v }).collect();
    loglog_fit(&ts, &vs)
}

/// `n` geometrically spaced samples from `lo` to `hi` inclusive.
pub fn geometric_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo * (r * i as f64).exp() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> NormSeries {
        let mut s = NormSeries::new("x", 2.0, 2.0, DerivativeIndex::ZERO);
        for t in geometric_samples(lo, hi, n) {
            s.push(t, f(t));
        }
        s
    }

    #[test]
    fn exact_power_law() {
        let s = series(|t| 1.0 / t, 1.0, 100.0, 10);
        let f = fit_decay_rate(&s, (1.0, 100.0), false).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_with_correction() {
        // Oracle: d log(3 t^{-1.5}(1 + 0.1/t)) / d log t = -1.5 - 0.1/(t + 0.1), at most 0.048 in
        // magnitude at t = 2 and averaging well under 0.02 over the window.
        let s = series(|t| 3.0 * t.powf(-1.5) * (1.0 + 0.1 / t), 2.0, 200.0, 20);
        let f = fit_decay_rate(&s, (2.0, 200.0), false).unwrap();
        assert!((f.exponent + 1.5).abs() < 0.02, "{}", f.exponent);
    }

    #[test]
    fn log_mode_removes_log_factor() {
        let s = series(|t| (2.0 + t).ln() / t, 1.0, 100.0, 12);
        let f = fit_decay_rate(&s, (1.0, 100.0), true).unwrap();
        assert!((f.exponent + 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_series() {
        let s = series(|t| 1.0 / t, 1.0, 5.0, 10);
        assert!(fit_decay_rate(&s, (1.0, 5.0), false).is_err());
        let s = series(|t| t - 2.0, 1.0, 100.0, 10);
        assert!(fit_decay_rate(&s, (1.0, 100.0), false).is_err());
        let s = series(|t| 1.0 / t, 1.0, 100.0, 4);
        assert!(fit_decay_rate(&s, (1.0, 100.0), false).is_err());
    }

    #[test]
    fn geometric_endpoints() {
        let v = geometric_samples(1.0, 100.0, 12);
        assert_eq!(v.len(), 12);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[11], 100.0);
    }
}
