//! Per-point normals by local PCA and mean curvature by quadric fitting.
//!
//! Each point's neighborhood is expressed in a tangent frame `(u, v, n)`
//! centred on the point, and the height field
//! `w = a·u² + b·u·v + c·v² + d·u + e·v` is fitted by least squares. The
//! linear terms absorb the tilt of the PCA normal; with them zero the mean
//! curvature at the origin reduces to `(f_uu + f_vv) / 2 = a + c`, and in
//! general it is the Monge-patch expression in [`monge_mean_curvature`].
//! The magnitude is stored.

use nalgebra::{Matrix3, SMatrix, SVector, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::index::NeighborIndex;

pub const DEFAULT_K: usize = 16;
pub const MIN_NORMAL_K: usize = 4;
pub const MIN_CURVATURE_K: usize = 6;

/// Reciprocal condition number below which a quadric fit is rejected.
const RCOND_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    pub normals: Vec<Vector3<f64>>,
    pub k_used: usize,
}

impl NormalField {
    /// Uses normals carried by the cloud itself, if any.
    pub fn from_cloud(cloud: &PointCloud) -> Option<Self> {
        cloud.normals().map(|n| Self {
            normals: n.to_vec(),
            k_used: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    /// `|H|` per point, in 1/length.
    pub h_raw: Vec<f64>,
    /// `h_raw` min-max scaled to `[0, 1]`.
    pub h_norm: Vec<f64>,
    pub k_used: usize,
    /// Points whose quadric fit was rank deficient; their `h_raw` is 0.
    pub rank_deficient: Vec<bool>,
}

impl CurvatureField {
    /// Wraps externally supplied magnitudes (e.g. an analytic oracle).
    pub fn from_raw(h_raw: Vec<f64>, k_used: usize) -> Result<Self> {
        if h_raw.is_empty() {
            return Err(Error::InvalidArgument("empty curvature field".into()));
        }
        if let Some(i) = h_raw.iter().position(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "curvature {i} is negative or non-finite"
            )));
        }
        let n = h_raw.len();
        Ok(normalize_curvature(Self {
            h_raw,
            h_norm: Vec::new(),
            k_used,
            rank_deficient: vec![false; n],
        }))
    }

    pub fn len(&self) -> usize {
        self.h_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_raw.is_empty()
    }

    pub fn min_h(&self) -> f64 {
        self.h_raw.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_h(&self) -> f64 {
        self.h_raw.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Median of `h_raw`; the mean of the two middle values for even N.
    pub fn median_h(&self) -> f64 {
        median(&self.h_raw)
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn check_k(k: usize, min: usize, n: usize) -> Result<()> {
    if k < min || k > n {
        return Err(Error::InvalidArgument(format!(
            "neighborhood size k={k} must lie in [{min}, {n}]"
        )));
    }
    Ok(())
}

/// PCA normal of every point from its `k` nearest neighbors (itself
/// included), oriented away from the neighborhood centroid.
pub fn estimate_normals(
    cloud: &PointCloud,
    index: &NeighborIndex,
    k: usize,
) -> Result<NormalField> {
    check_k(k, MIN_NORMAL_K, cloud.len())?;
    let normals = (0..cloud.len())
        .into_par_iter()
        .map(|i| pca_normal(cloud, index, i, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(NormalField { normals, k_used: k })
}

fn pca_normal(
    cloud: &PointCloud,
    index: &NeighborIndex,
    i: usize,
    k: usize,
) -> Result<Vector3<f64>> {
    let pts = cloud.positions();
    let hood = index.knn_of(i, k);
    let centroid = hood
        .iter()
        .fold(Vector3::zeros(), |acc, nb| acc + pts[nb.index].coords)
        / hood.len() as f64;
    let mut cov = Matrix3::zeros();
    for nb in &hood {
        let d = pts[nb.index].coords - centroid;
        cov += d * d.transpose();
    }
    cov /= hood.len() as f64;
    if cov.amax() == 0.0 {
        return Err(Error::DegenerateNeighborhood { index: i });
    }

    let eig = SymmetricEigen::new(cov);
    let smallest = eig.eigenvalues.imin();
    let mut normal: Vector3<f64> = eig.eigenvectors.column(smallest).normalize();

    let offset = pts[i].coords - centroid;
    let side = normal.dot(&offset);
    let tol = 1e-12 * cov.trace().sqrt();
    if side.abs() > tol {
        if side < 0.0 {
            normal = -normal;
        }
    } else if normal[normal.iamax()] < 0.0 {
        // no usable offset (flat or symmetric neighborhood): fix the sign
        // by making the dominant component positive
        normal = -normal;
    }
    Ok(normal)
}

/// Orthonormal `(u, v)` spanning the plane orthogonal to `n`, with `u` the
/// projection of the coordinate axis least aligned with `n`.
pub fn tangent_frame(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let axis = n.iamin();
    let mut e = Vector3::zeros();
    e[axis] = 1.0;
    let u = (e - n * n.dot(&e)).normalize();
    let v = n.cross(&u);
    (u, v)
}

/// Mean curvature of the graph `w = f(u, v)` at a point with first
/// derivatives `(fu, fv)` and second derivatives `(fuu, fuv, fvv)`.
pub fn monge_mean_curvature(fu: f64, fv: f64, fuu: f64, fuv: f64, fvv: f64) -> f64 {
    let grad2 = 1.0 + fu * fu + fv * fv;
    ((1.0 + fv * fv) * fuu - 2.0 * fu * fv * fuv + (1.0 + fu * fu) * fvv)
        / (2.0 * grad2 * grad2.sqrt())
}

/// Fits the tangent-frame quadric at every point and stores `|H|`.
pub fn estimate_mean_curvature(
    cloud: &PointCloud,
    normals: &NormalField,
    index: &NeighborIndex,
    k: usize,
) -> Result<CurvatureField> {
    check_k(k, MIN_CURVATURE_K, cloud.len())?;
    if normals.normals.len() != cloud.len() {
        return Err(Error::LengthMismatch {
            expected: cloud.len(),
            found: normals.normals.len(),
        });
    }
    let fits: Vec<Option<f64>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| fit_quadric(cloud, &normals.normals[i], index, i, k))
        .collect();
    let rank_deficient = fits.iter().map(Option::is_none).collect();
    let h_raw = fits.into_iter().map(|h| h.unwrap_or(0.0)).collect();
    Ok(normalize_curvature(CurvatureField {
        h_raw,
        h_norm: Vec::new(),
        k_used: k,
        rank_deficient,
    }))
}

fn fit_quadric(
    cloud: &PointCloud,
    normal: &Vector3<f64>,
    index: &NeighborIndex,
    i: usize,
    k: usize,
) -> Option<f64> {
    let pts = cloud.positions();
    let origin = pts[i];
    let (u, v) = tangent_frame(normal);
    let local: Vec<Vector3<f64>> = index
        .knn_of(i, k)
        .into_iter()
        .filter(|nb| nb.index != i)
        .map(|nb| {
            let d = pts[nb.index] - origin;
            Vector3::new(d.dot(&u), d.dot(&v), d.dot(normal))
        })
        .collect();
    // fit in units of the neighborhood radius so conditioning is scale-free
    let scale = local.iter().map(|p| p.xy().norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }
    let mut ata = SMatrix::<f64, 5, 5>::zeros();
    let mut atw = SVector::<f64, 5>::zeros();
    for p in &local {
        let (x, y, w) = (p.x / scale, p.y / scale, p.z / scale);
        let row = SVector::<f64, 5>::from([x * x, x * y, y * y, x, y]);
        ata += row * row.transpose();
        atw += row * w;
    }
    let eig = SymmetricEigen::new(ata);
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if !(hi > 0.0) || lo <= RCOND_LIMIT * hi {
        return None;
    }
    let c = ata.cholesky()?.solve(&atw);
    // undo the scaling: second-order coefficients pick up 1/scale
    let h = monge_mean_curvature(
        c[3],
        c[4],
        2.0 * c[0] / scale,
        c[1] / scale,
        2.0 * c[2] / scale,
    )
    .abs();
    h.is_finite().then_some(h)
}

/// Min-max scales `h_raw` into `h_norm`; a constant field maps to all zeros.
pub fn normalize_curvature(mut field: CurvatureField) -> CurvatureField {
    let lo = field.min_h();
    let hi = field.max_h();
    let range = hi - lo;
    field.h_norm = if range > 0.0 {
        field.h_raw.iter().map(|h| (h - lo) / range).collect()
    } else {
        vec![0.0; field.h_raw.len()]
    };
    field
}

/// PCA normals followed by quadric curvature, both with `k` neighbors.
pub fn estimate(cloud: &PointCloud, index: &NeighborIndex, k: usize) -> Result<CurvatureField> {
    let normals = estimate_normals(cloud, index, k)?;
    estimate_mean_curvature(cloud, &normals, index, k)
}
