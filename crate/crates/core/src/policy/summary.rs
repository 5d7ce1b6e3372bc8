use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureField;

pub const HISTOGRAM_BINS: usize = 64;
/// Histogram bins plus mean, standard deviation and skewness.
pub const SUMMARY_LEN: usize = HISTOGRAM_BINS + 3;

/// Fixed-size, point-order-invariant description of a curvature field:
/// the normalized histogram of `h_norm` and its first three moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub histogram: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Standardized third moment; 0 when `std` is 0.
    pub skewness: f64,
}

impl CurvatureSummary {
    pub fn features(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(SUMMARY_LEN);
        f.extend_from_slice(&self.histogram);
        f.extend([self.mean, self.std, self.skewness]);
        f
    }

    /// Summary of `HISTOGRAM_BINS` values evenly spaced over `[0, 1]`: a
    /// flat histogram. Used as the fixed input when training against a
    /// cloud-independent reward.
    pub fn uniform() -> Self {
        let grid: Vec<f64> = (0..HISTOGRAM_BINS)
            .map(|i| i as f64 / (HISTOGRAM_BINS - 1) as f64)
            .collect();
        Self::from_normalized(&grid)
    }

    /// Summary of `values`, which must lie in `[0, 1]`.
    pub fn from_normalized(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mut histogram = vec![0.0; HISTOGRAM_BINS];
        for &h in values {
            let bin = ((h * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            histogram[bin] += 1.0;
        }
        histogram.iter_mut().for_each(|c| *c /= n);
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        let skewness = if std > 0.0 {
            values
                .iter()
                .map(|h| ((h - mean) / std).powi(3))
                .sum::<f64>()
                / n
        } else {
            0.0
        };
        Self {
            histogram,
            mean,
            std,
            skewness,
        }
    }
}

pub fn featurize_curvature(curv: &CurvatureField) -> CurvatureSummary {
    CurvatureSummary::from_normalized(&curv.h_norm)
}
