//! Shared helpers and brute-force reference implementations for the
//! integration tests. Each reference is written independently of the
//! library code it checks.

#![allow(dead_code)]

use cfps::PointCloud;
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn d2(a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Random cloud of `n` points. One in four clouds is snapped to a coarse
/// lattice so that distance ties actually occur.
pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let lattice = rng.random_range(0..4) == 0;
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let mut p = [
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ];
            if lattice {
                p.iter_mut().for_each(|c| *c = (*c * 4.0).floor());
            }
            p
        })
        .collect();
    PointCloud::from_xyz(&pts).unwrap()
}

/// Furthest point sampling from scratch at every step: the candidate with
/// the largest minimum squared distance to the chosen set, lowest index on
/// ties.
pub fn brute_fps(cloud: &PointCloud, seed: usize) -> Vec<usize> {
    let p = cloud.positions();
    let n = p.len();
    let mut chosen = vec![seed];
    let mut taken = vec![false; n];
    taken[seed] = true;
    while chosen.len() < n {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if taken[j] {
                continue;
            }
            let m = chosen
                .iter()
                .map(|&s| d2(&p[j], &p[s]))
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((j, m));
            }
        }
        let (j, _) = best.unwrap();
        taken[j] = true;
        chosen.push(j);
    }
    chosen
}

/// For each point of `from`, the squared distance to its nearest point in
/// `to`, by exhaustive search.
pub fn brute_nearest(from: &PointCloud, to: &PointCloud) -> Vec<f64> {
    from.positions()
        .iter()
        .map(|p| {
            to.positions()
                .iter()
                .map(|q| d2(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn brute_chamfer(a: &PointCloud, b: &PointCloud) -> f64 {
    let ab = brute_nearest(a, b);
    let ba = brute_nearest(b, a);
    ab.iter().sum::<f64>() / ab.len() as f64 + ba.iter().sum::<f64>() / ba.len() as f64
}

pub fn brute_f1(pred: &PointCloud, gt: &PointCloud, t: f64) -> (f64, f64, f64) {
    let hit = |d: Vec<f64>| d.iter().filter(|&&x| x <= t * t).count() as f64 / d.len() as f64;
    let precision = hit(brute_nearest(pred, gt));
    let recall = hit(brute_nearest(gt, pred));
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (f1, precision, recall)
}

/// Ranks starting at 1, tied values sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len().is_multiple_of(2) {
        (s[m - 1] + s[m]) / 2.0
    } else {
        s[m]
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
