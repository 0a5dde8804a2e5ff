//! Box-plot summary statistics for error samples.

use serde::{Deserialize, Serialize};

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean, quartiles, 1.5 IQR whiskers and the largest outliers of a sample.
///
/// Quartiles interpolate linearly between order statistics. The fences are
/// `q1 - 1.5 IQR` and `q3 + 1.5 IQR`; the whiskers end at the most extreme
/// samples inside them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// Up to five samples outside the fences, largest first.
    pub top_outliers: Vec<f64>,
    pub outlier_count: usize,
}

impl BoxStats {
    /// Non-finite samples are ignored.
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut s: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
        s.sort_by(f64::total_cmp);
        let count = s.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                median: f64::NAN,
                q1: f64::NAN,
                q3: f64::NAN,
                iqr: f64::NAN,
                lower_fence: f64::NAN,
                upper_fence: f64::NAN,
                whisker_low: f64::NAN,
                whisker_high: f64::NAN,
                top_outliers: Vec::new(),
                outlier_count: 0,
            };
        }
        let mean = s.iter().sum::<f64>() / count as f64;
        let q1 = quantile_sorted(&s, 0.25);
        let median = quantile_sorted(&s, 0.5);
        let q3 = quantile_sorted(&s, 0.75);
        let iqr = q3 - q1;
        let lower_fence = q1 - 1.5 * iqr;
        let upper_fence = q3 + 1.5 * iqr;
        let inside = |v: &f64| *v >= lower_fence && *v <= upper_fence;
        let whisker_low = s.iter().copied().find(inside).unwrap_or(q1);
        let whisker_high = s.iter().rev().copied().find(inside).unwrap_or(q3);
        let mut outliers: Vec<f64> = s.iter().copied().filter(|v| !inside(v)).collect();
        let outlier_count = outliers.len();
        outliers.sort_by(|a, b| b.total_cmp(a));
        outliers.truncate(5);
        Self {
            count,
            mean,
            median,
            q1,
            q3,
            iqr,
            lower_fence,
            upper_fence,
            whisker_low,
            whisker_high,
            top_outliers: outliers,
            outlier_count,
        }
    }
}
