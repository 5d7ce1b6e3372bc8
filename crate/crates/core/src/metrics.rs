//! Chamfer distance, F1-score and curvature retention.
//!
//! Chamfer uses squared nearest-neighbor distances, averaged per direction
//! and summed over both directions.

use serde::Serialize;

use crate::cloud::{PointCloud, SampleSelection};
use crate::curvature::CurvatureField;
use crate::error::{Error, Result};
use crate::index::NeighborIndex;

/// Fraction of the ground-truth bounding-box diagonal used as the default
/// F1 threshold.
pub const DEFAULT_F1_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub chamfer: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
    pub curvature_retention: f64,
}

/// Squared distance from each point of `from` to its nearest point in `to`.
fn nearest_dist2(from: &PointCloud, to: &NeighborIndex) -> Vec<f64> {
    from.positions()
        .iter()
        .map(|p| to.nearest(p).dist2)
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> f64 {
    chamfer_indexed(a, &NeighborIndex::build(a), b, &NeighborIndex::build(b))
}

/// Chamfer distance with prebuilt indices.
pub fn chamfer_indexed(
    a: &PointCloud,
    a_index: &NeighborIndex,
    b: &PointCloud,
    b_index: &NeighborIndex,
) -> f64 {
    mean(&nearest_dist2(a, b_index)) + mean(&nearest_dist2(b, a_index))
}

/// `(f1, precision, recall)` with matches counted when the nearest
/// neighbor lies within `threshold` (inclusive).
pub fn f1_score(pred: &PointCloud, gt: &PointCloud, threshold: f64) -> Result<(f64, f64, f64)> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "F1 threshold must be positive, got {threshold}"
        )));
    }
    let t2 = threshold * threshold;
    let within = |d: &Vec<f64>| d.iter().filter(|&&x| x <= t2).count() as f64 / d.len() as f64;
    let precision = within(&nearest_dist2(pred, &NeighborIndex::build(gt)));
    let recall = within(&nearest_dist2(gt, &NeighborIndex::build(pred)));
    Ok((harmonic(precision, recall), precision, recall))
}

fn harmonic(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Mean `h_raw` over the selection divided by the mean of the `K` largest
/// `h_raw` values, clipped to `[0, 1]`. A cloud whose top-K curvature is
/// zero scores 1.
pub fn curvature_retention(curv: &CurvatureField, sel: &SampleSelection) -> Result<f64> {
    if sel.parent_n() != curv.len() {
        return Err(Error::InvalidSelection(format!(
            "selection built for {} points, curvature field has {}",
            sel.parent_n(),
            curv.len()
        )));
    }
    let k = sel.len();
    if k == 0 {
        return Err(Error::InvalidSelection("empty selection".into()));
    }
    let picked = sel.indices().iter().map(|&i| curv.h_raw[i]).sum::<f64>() / k as f64;
    let mut sorted = curv.h_raw.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let best = sorted[..k].iter().sum::<f64>() / k as f64;
    if best <= 0.0 {
        return Ok(1.0);
    }
    Ok((picked / best).clamp(0.0, 1.0))
}

/// Default F1 threshold for a ground-truth cloud.
pub fn default_threshold(gt: &PointCloud) -> f64 {
    DEFAULT_F1_FRACTION * gt.bbox_diagonal()
}

/// All metrics for a prediction that is a selection of the ground truth.
pub fn report(
    gt: &PointCloud,
    sel: &SampleSelection,
    curv: &CurvatureField,
    threshold: f64,
) -> Result<MetricReport> {
    let pred = gt.gather(sel)?;
    let (f1, precision, recall) = f1_score(&pred, gt, threshold)?;
    Ok(MetricReport {
        chamfer: chamfer_distance(&pred, gt),
        f1,
        precision,
        recall,
        threshold,
        curvature_retention: curvature_retention(curv, sel)?,
    })
}
