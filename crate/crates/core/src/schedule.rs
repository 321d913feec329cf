//! Geometric grids of heat times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Heat times `s_max * ratio^n` down to `s_min`, strictly decreasing, in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatSchedule {
    pub s_min: f64,
    pub s_max: f64,
    pub ratio: f64,
    pub values: Vec<f64>,
}

impl HeatSchedule {
    pub fn new(s_min: f64, s_max: f64, ratio: f64) -> Result<Self> {
        if !(s_min > 0.0 && s_min <= s_max && s_max <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "schedule needs 0 < s_min <= s_max <= 1, got [{s_min}, {s_max}]"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("ratio {ratio} not in (0, 1)")));
        }
        let mut values = Vec::new();
        let mut s = s_max;
        while s >= s_min * (1.0 - 1e-12) {
            values.push(s);
            s *= ratio;
        }
        Ok(Self { s_min, s_max, ratio, values })
    }

    /// `[2^-12, 1]` with ratio `2^{-1/4}` (about 13 points per decade).
    pub fn standard() -> Self {
        Self::new(2f64.powi(-12), 1.0, 2f64.powf(-0.25)).expect("valid constants")
    }

    /// Arbitrary strictly decreasing values in `(0, 1]`.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        values.dedup();
        if values.is_empty() || values.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::InvalidParameter("schedule values must lie in (0, 1]".into()));
        }
        let (s_max, s_min) = (values[0], *values.last().unwrap_or(&values[0]));
        let ratio = if values.len() > 1 {
            (s_min / s_max).powf(1.0 / (values.len() - 1) as f64)
        } else {
            0.5
        };
        Ok(Self { s_min, s_max, ratio, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Decades spanned by the sampled values.
    pub fn decades(&self) -> f64 {
        match (self.values.first(), self.values.last()) {
            (Some(a), Some(b)) => (a / b).log10(),
            _ => 0.0,
        }
    }

    /// Average sampling density in points per decade.
    pub fn points_per_decade(&self) -> f64 {
        if self.values.len() < 2 {
            return 0.0;
        }
        (self.values.len() - 1) as f64 / self.decades()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_schedule() {
        let s = HeatSchedule::standard();
        assert_eq!(s.len(), 49);
        assert_eq!(s.values[0], 1.0);
        assert!((s.values[48] - 2f64.powi(-12)).abs() < 1e-15);
        assert!(s.values.windows(2).all(|w| w[0] > w[1]));
        assert!(s.points_per_decade() > 13.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(HeatSchedule::new(0.0, 1.0, 0.5).is_err());
        assert!(HeatSchedule::new(0.1, 2.0, 0.5).is_err());
        assert!(HeatSchedule::new(0.1, 1.0, 1.0).is_err());
        assert!(HeatSchedule::from_values(vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn half_power_ratio_is_below_eight_per_decade() {
        let s = HeatSchedule::new(2f64.powi(-12), 1.0, 2f64.powf(-0.5)).unwrap();
        assert!(s.points_per_decade() < 8.0);
    }
}
