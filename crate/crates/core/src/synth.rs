//! Seeded analytic surfaces with closed-form mean curvature.

use std::f64::consts::TAU;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cloud::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum ShapeParams {
    Sphere {
        radius: f64,
        n: usize,
        seed: u64,
    },
    Cylinder {
        radius: f64,
        height: f64,
        n: usize,
        seed: u64,
    },
    Torus {
        major: f64,
        minor: f64,
        n: usize,
        seed: u64,
    },
    Plane {
        side: f64,
        n: usize,
        seed: u64,
        jitter: f64,
    },
}

/// A generated cloud and its exact `|H|` per point.
#[derive(Debug, Clone)]
pub struct AnalyticCloud {
    pub cloud: PointCloud,
    pub h_true: Vec<f64>,
    pub params: ShapeParams,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn build(
    positions: Vec<Point3<f64>>,
    h_true: Vec<f64>,
    params: ShapeParams,
    id: &str,
) -> AnalyticCloud {
    let cloud = PointCloud::new(positions)
        .expect("generators emit finite, non-empty clouds")
        .with_id(id);
    AnalyticCloud {
        cloud,
        h_true,
        params,
    }
}

/// Uniform points on a sphere from normalized Gaussian directions.
///
/// # Panics
/// If `radius <= 0` or `n < 8`.
pub fn gen_sphere(radius: f64, n: usize, seed: u64) -> AnalyticCloud {
    assert!(radius > 0.0 && n >= 8, "sphere needs radius > 0 and n >= 8");
    let mut rng = rng(seed);
    let mut positions = Vec::with_capacity(n);
    while positions.len() < n {
        let d = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let len = d.norm();
        if len > 1e-12 {
            positions.push(Point3::from(d * (radius / len)));
        }
    }
    build(
        positions,
        vec![1.0 / radius; n],
        ShapeParams::Sphere { radius, n, seed },
        "sphere",
    )
}

/// Lateral surface of a z-aligned cylinder centred at the origin; no caps.
///
/// # Panics
/// If `radius` or `height` is not positive, or `n == 0`.
pub fn gen_cylinder(radius: f64, height: f64, n: usize, seed: u64) -> AnalyticCloud {
    assert!(
        radius > 0.0 && height > 0.0 && n > 0,
        "cylinder needs positive size"
    );
    let mut rng = rng(seed);
    let positions = (0..n)
        .map(|_| {
            let t = rng.random::<f64>() * TAU;
            let z = (rng.random::<f64>() - 0.5) * height;
            Point3::new(radius * t.cos(), radius * t.sin(), z)
        })
        .collect();
    build(
        positions,
        vec![0.5 / radius; n],
        ShapeParams::Cylinder {
            radius,
            height,
            n,
            seed,
        },
        "cylinder",
    )
}

/// `|H|` on a torus at tube angle `theta` (0 on the outer equator).
pub fn torus_mean_curvature(major: f64, minor: f64, theta: f64) -> f64 {
    let c = theta.cos();
    ((major + 2.0 * minor * c) / (2.0 * minor * (major + minor * c))).abs()
}

/// Area-uniform torus around the z axis. The tube angle is drawn by
/// rejection against the area element `R + r·cos θ`.
///
/// # Panics
/// Unless `major > minor > 0` and `n > 0`.
pub fn gen_torus(major: f64, minor: f64, n: usize, seed: u64) -> AnalyticCloud {
    assert!(
        major > minor && minor > 0.0 && n > 0,
        "torus needs R > r > 0"
    );
    let mut rng = rng(seed);
    let mut positions = Vec::with_capacity(n);
    let mut h_true = Vec::with_capacity(n);
    while positions.len() < n {
        let theta = rng.random::<f64>() * TAU;
        let accept = rng.random::<f64>() * (major + minor);
        if accept > major + minor * theta.cos() {
            continue;
        }
        let phi = rng.random::<f64>() * TAU;
        let ring = major + minor * theta.cos();
        positions.push(Point3::new(
            ring * phi.cos(),
            ring * phi.sin(),
            minor * theta.sin(),
        ));
        h_true.push(torus_mean_curvature(major, minor, theta));
    }
    build(
        positions,
        h_true,
        ShapeParams::Torus {
            major,
            minor,
            n,
            seed,
        },
        "torus",
    )
}

/// Square grid in `z = 0`, centred at the origin, row-major, first `n`
/// nodes of a `⌈√n⌉`-wide lattice; x and y are jittered uniformly in
/// `[-jitter, jitter]`.
///
/// # Panics
/// If `side <= 0`, `jitter < 0` or `n == 0`.
pub fn gen_plane(side: f64, n: usize, seed: u64, jitter: f64) -> AnalyticCloud {
    assert!(
        side > 0.0 && jitter >= 0.0 && n > 0,
        "plane needs side > 0, jitter >= 0"
    );
    let mut rng = rng(seed);
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let step = if cols > 1 {
        side / (cols - 1) as f64
    } else {
        0.0
    };
    let positions = (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let mut x = c as f64 * step - 0.5 * side;
            let mut y = r as f64 * step - 0.5 * step * (rows - 1) as f64;
            if jitter > 0.0 {
                x += rng.random_range(-jitter..=jitter);
                y += rng.random_range(-jitter..=jitter);
            }
            Point3::new(x, y, 0.0)
        })
        .collect();
    build(
        positions,
        vec![0.0; n],
        ShapeParams::Plane {
            side,
            n,
            seed,
            jitter,
        },
        "plane",
    )
}
