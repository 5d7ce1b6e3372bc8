//! Furthest point sampling run to completion over the whole cloud.
//!
//! Besides the usual K-subset, the full entry order is kept so that every
//! point, selected or not, gets a rank `F` and a soft rank `S = F / (N - 1)`.

use crate::cloud::{PointCloud, SampleSelection};
use crate::error::{Error, Result};
use crate::index::dist2;

/// Entry order of every point under FPS from a fixed seed point.
#[derive(Debug, Clone, PartialEq)]
pub struct FpsRanking {
    /// `order[r]` is the point that entered at step `r`.
    pub order: Vec<usize>,
    /// Inverse of `order`: `rank_of[i]` is the step at which `i` entered.
    pub rank_of: Vec<usize>,
    pub soft_rank: Vec<f64>,
    pub seed_index: usize,
}

impl FpsRanking {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Ranks all `N` points by FPS entry order starting from `seed_index`.
///
/// Each step picks the unselected point with the largest squared distance
/// to its nearest selected point; ties go to the lowest index. A running
/// nearest-distance array keeps each step O(N).
pub fn fps_full_ranking(cloud: &PointCloud, seed_index: usize) -> Result<FpsRanking> {
    let n = cloud.len();
    if seed_index >= n {
        return Err(Error::InvalidArgument(format!(
            "seed index {seed_index} out of range for {n} points"
        )));
    }
    let pts = cloud.positions();
    let mut order = Vec::with_capacity(n);
    let mut selected = vec![false; n];
    let mut nearest = vec![f64::INFINITY; n];
    let mut current = seed_index;
    loop {
        order.push(current);
        selected[current] = true;
        if order.len() == n {
            break;
        }
        let anchor = pts[current];
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let d = dist2(&pts[j], &anchor);
            if d < nearest[j] {
                nearest[j] = d;
            }
            if nearest[j] > best_d {
                best_d = nearest[j];
                best = j;
            }
        }
        current = best;
    }
    Ok(ranking_from_order(order, seed_index))
}

fn ranking_from_order(order: Vec<usize>, seed_index: usize) -> FpsRanking {
    let n = order.len();
    let mut rank_of = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank_of[i] = r;
    }
    let soft_rank = if n > 1 {
        let denom = (n - 1) as f64;
        rank_of.iter().map(|&r| r as f64 / denom).collect()
    } else {
        vec![0.0; n]
    };
    FpsRanking {
        order,
        rank_of,
        soft_rank,
        seed_index,
    }
}

/// The first `k` entrants.
pub fn fps_select(ranking: &FpsRanking, k: usize) -> Result<SampleSelection> {
    let n = ranking.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "sample size k={k} must lie in [1, {n}]"
        )));
    }
    SampleSelection::new(ranking.order[..k].to_vec(), n)
}

pub fn soft_rank(ranking: &FpsRanking) -> &[f64] {
    &ranking.soft_rank
}

/// Largest distance from any point to its nearest point of `sel`.
pub fn covering_radius(cloud: &PointCloud, sel: &SampleSelection) -> f64 {
    let pts = cloud.positions();
    pts.iter()
        .map(|p| {
            sel.indices()
                .iter()
                .map(|&s| dist2(p, &pts[s]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}
