//! Least-squares line fits in log-log coordinates.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if n > 2 { (ss / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LinearFit { slope, intercept, residual: (ss / nf).sqrt(), slope_stderr, n })
}

/// Fit of `log y` against `log s` over the selected indices.
pub fn log_log_fit(s: &[f64], y: &[f64], idx: &[usize]) -> Option<LinearFit> {
    let x: Vec<f64> = idx.iter().map(|&i| s[i].ln()).collect();
    let v: Vec<f64> = idx.iter().map(|&i| y[i].ln()).collect();
    if v.iter().any(|a| !a.is_finite()) {
        return None;
    }
    linear_fit(&x, &v)
}

/// Indices of the samples inside the one-decade window centred (in log
/// scale) on the sampled range.
pub fn middle_decade(s: &[f64]) -> Vec<usize> {
    let logs: Vec<f64> = s.iter().map(|v| v.log10()).collect();
    let (lo, hi) = logs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mid = 0.5 * (lo + hi);
    (0..s.len()).filter(|&i| (logs[i] - mid).abs() <= 0.5 + 1e-9).collect()
}

/// Indices with `s <= 10 * min(s)`.
pub fn last_decade(s: &[f64]) -> Vec<usize> {
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..s.len()).filter(|&i| s[i] <= 10.0 * lo * (1.0 + 1e-9)).collect()
}
