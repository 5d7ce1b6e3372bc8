//! Joint-rank swap between the FPS core set and its complement.
//!
//! The core is the first `k` FPS entrants. Every point gets a joint rank
//! from its normalized curvature and FPS soft rank; the `n` lowest-ranked
//! core points are replaced by the `n` highest-ranked non-core points, with
//! `n = min(⌊g·N⌋, k, N - k)`. The exchange happens once, without
//! re-ranking.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, SampleSelection};
use crate::curvature::CurvatureField;
use crate::error::{Error, Result};
use crate::fps::{fps_full_ranking, FpsRanking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    /// `J = C + S`
    #[default]
    Additive,
    /// `J = C · S`
    Multiplicative,
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CombineMode::Additive => "additive",
            CombineMode::Multiplicative => "multiplicative",
        })
    }
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(CombineMode::Additive),
            "multiplicative" => Ok(CombineMode::Multiplicative),
            other => Err(Error::InvalidArgument(format!(
                "unknown combine mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointRank {
    pub j: Vec<f64>,
    pub mode: CombineMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfpsResult {
    /// Final core: surviving FPS core in entry order, then swapped-in points
    /// by descending joint rank.
    pub selection: SampleSelection,
    pub swapped_out: Vec<usize>,
    pub swapped_in: Vec<usize>,
    pub g_used: f64,
    pub n_exchange: usize,
}

pub fn joint_rank(
    curv: &CurvatureField,
    ranking: &FpsRanking,
    mode: CombineMode,
) -> Result<JointRank> {
    if curv.h_norm.len() != ranking.soft_rank.len() {
        return Err(Error::LengthMismatch {
            expected: ranking.soft_rank.len(),
            found: curv.h_norm.len(),
        });
    }
    let j = curv
        .h_norm
        .iter()
        .zip(&ranking.soft_rank)
        .map(|(c, s)| match mode {
            CombineMode::Additive => c + s,
            CombineMode::Multiplicative => c * s,
        })
        .collect();
    Ok(JointRank { j, mode })
}

/// `min(⌊g·n⌋, k, n - k)`.
pub fn exchange_count(g: f64, n: usize, k: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::InvalidArgument(format!(
            "exchange ratio {g} outside [0, 1]"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "core size k={k} must lie in [1, {n}]"
        )));
    }
    let wanted = (g * n as f64).floor() as usize;
    Ok(wanted.min(k).min(n - k))
}

/// Runs FPS from `seed_index` and applies the swap.
pub fn cfps_sample(
    cloud: &PointCloud,
    curv: &CurvatureField,
    k: usize,
    g: f64,
    mode: CombineMode,
    seed_index: usize,
) -> Result<CfpsResult> {
    if curv.len() != cloud.len() {
        return Err(Error::LengthMismatch {
            expected: cloud.len(),
            found: curv.len(),
        });
    }
    let ranking = fps_full_ranking(cloud, seed_index)?;
    cfps_from_ranking(&ranking, curv, k, g, mode)
}

/// The swap on a precomputed ranking; lets callers reuse one FPS pass for
/// several ratios.
pub fn cfps_from_ranking(
    ranking: &FpsRanking,
    curv: &CurvatureField,
    k: usize,
    g: f64,
    mode: CombineMode,
) -> Result<CfpsResult> {
    let n = ranking.len();
    let n_exchange = exchange_count(g, n, k)?;
    let joint = joint_rank(curv, ranking, mode)?;
    let j = &joint.j;
    let (core, rest) = ranking.order.split_at(k);

    let ascending = |a: &usize, b: &usize| j[*a].total_cmp(&j[*b]).then(a.cmp(b));
    let descending = |a: &usize, b: &usize| -> Ordering { j[*b].total_cmp(&j[*a]).then(a.cmp(b)) };

    let mut low = core.to_vec();
    low.sort_by(ascending);
    low.truncate(n_exchange);

    let mut high = rest.to_vec();
    high.sort_by(descending);
    high.truncate(n_exchange);

    let mut leaving = vec![false; n];
    for &i in &low {
        leaving[i] = true;
    }
    let indices: Vec<usize> = core
        .iter()
        .copied()
        .filter(|&i| !leaving[i])
        .chain(high.iter().copied())
        .collect();

    Ok(CfpsResult {
        selection: SampleSelection::new(indices, n)?,
        swapped_out: low,
        swapped_in: high,
        g_used: g,
        n_exchange,
    })
}
