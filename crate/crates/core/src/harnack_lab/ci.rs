use serde::{Deserialize, Serialize};

use crate::stats::{t_quantile, wilson_interval, Accumulator};

/// Default confidence level of every interval.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// A Monte Carlo estimate with its standard error and a two-sided interval.
///
/// Means carry Student-t intervals, proportions Wilson intervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub confidence: f64,
    pub lower: f64,
    pub upper: f64,
}

impl EstimateCI {
    pub fn from_accumulator(acc: &Accumulator, confidence: f64) -> Self {
        let n = acc.n();
        let se = acc.std_error();
        let q = if n > 1 {
            t_quantile(confidence, (n - 1) as f64)
        } else {
            f64::INFINITY
        };
        let half = if se > 0.0 { q * se } else { 0.0 };
        Self {
            mean: acc.mean(),
            std_error: se,
            n,
            confidence,
            lower: acc.mean() - half,
            upper: acc.mean() + half,
        }
    }

    pub fn from_samples(samples: &[f64], confidence: f64) -> Self {
        Self::from_accumulator(&samples.iter().copied().collect(), confidence)
    }

    pub fn from_proportion(successes: u64, n: u64, confidence: f64) -> Self {
        let p = if n == 0 { 0.0 } else { successes as f64 / n as f64 };
        let (lower, upper) = wilson_interval(successes, n, confidence);
        Self {
            mean: p,
            std_error: if n == 0 { 0.0 } else { (p * (1.0 - p) / n as f64).sqrt() },
            n,
            confidence,
            lower,
            upper,
        }
    }

    /// Mean scaled by a positive constant, interval included.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mean: self.mean * c,
            std_error: self.std_error * c.abs(),
            lower: (self.lower * c).min(self.upper * c),
            upper: (self.lower * c).max(self.upper * c),
            ..*self
        }
    }

    /// True when `value` lies within `k` standard errors of the mean.
    pub fn within_se(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }

    /// `(mean - value) / std_error`; infinite when the error vanishes and the values differ.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = self.mean - value;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }
}
