//! Point cloud and selection types.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

const NORMAL_TOLERANCE: f64 = 1e-6;

/// An ordered set of 3D positions with optional unit normals.
///
/// Construction validates the invariants: at least one point, finite
/// coordinates, and (when present) one unit normal per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3<f64>>,
    normals: Option<Vec<Vector3<f64>>>,
    id: String,
}

impl PointCloud {
    pub fn new(positions: Vec<Point3<f64>>) -> Result<Self> {
        Self::with_normals(positions, None)
    }

    pub fn with_normals(
        positions: Vec<Point3<f64>>,
        normals: Option<Vec<Vector3<f64>>>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidCloud("cloud has no points".into()));
        }
        if let Some(i) = positions
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidCloud(format!(
                "position {i} has a non-finite coordinate"
            )));
        }
        if let Some(normals) = &normals {
            if normals.len() != positions.len() {
                return Err(Error::LengthMismatch {
                    expected: positions.len(),
                    found: normals.len(),
                });
            }
            if let Some(i) = normals
                .iter()
                .position(|n| !((n.norm() - 1.0).abs() <= NORMAL_TOLERANCE))
            {
                return Err(Error::InvalidCloud(format!(
                    "normal {i} is not unit length"
                )));
            }
        }
        Ok(Self {
            positions,
            normals,
            id: String::new(),
        })
    }

    /// Builds a cloud from `[x, y, z]` triples.
    pub fn from_xyz(coords: &[[f64; 3]]) -> Result<Self> {
        Self::new(coords.iter().map(|c| Point3::from(*c)).collect())
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    /// Always false for a constructed cloud; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum = self
            .positions
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.len() as f64)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = self.positions[0];
        let mut hi = self.positions[0];
        for p in &self.positions[1..] {
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Translates the centroid to the origin and scales so the farthest
    /// point lies on the unit sphere. Normals are unaffected. A cloud whose
    /// points all coincide is only translated.
    pub fn normalized_to_unit_sphere(&self) -> Self {
        let (center, scale) = self.unit_sphere_transform();
        self.transformed(center, scale)
    }

    /// The `(center, scale)` pair used by [`normalized_to_unit_sphere`],
    /// for applying the same map to related clouds.
    ///
    /// [`normalized_to_unit_sphere`]: Self::normalized_to_unit_sphere
    pub fn unit_sphere_transform(&self) -> (Point3<f64>, f64) {
        let c = self.centroid();
        let radius = self
            .positions
            .iter()
            .map(|p| (p - c).norm())
            .fold(0.0, f64::max);
        (c, if radius > 0.0 { 1.0 / radius } else { 1.0 })
    }

    /// Maps every position `p` to `(p - center) * scale`; `scale` must be
    /// positive so normals stay valid.
    pub fn transformed(&self, center: Point3<f64>, scale: f64) -> Self {
        debug_assert!(scale > 0.0);
        Self {
            positions: self
                .positions
                .iter()
                .map(|p| Point3::from((p - center) * scale))
                .collect(),
            normals: self.normals.clone(),
            id: self.id.clone(),
        }
    }

    /// Uniformly scales positions about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {s}"
            )));
        }
        Ok(Self {
            positions: self.positions.iter().map(|p| p * s).collect(),
            normals: self.normals.clone(),
            id: self.id.clone(),
        })
    }

    /// Materializes the points of `sel` in selection order.
    pub fn gather(&self, sel: &SampleSelection) -> Result<Self> {
        if sel.parent_n() != self.len() {
            return Err(Error::InvalidSelection(format!(
                "selection built for {} points, cloud has {}",
                sel.parent_n(),
                self.len()
            )));
        }
        let positions = sel.indices().iter().map(|&i| self.positions[i]).collect();
        let normals = self
            .normals
            .as_ref()
            .map(|n| sel.indices().iter().map(|&i| n[i]).collect());
        Self::with_normals(positions, normals).map(|c| c.with_id(self.id.clone()))
    }
}

/// An ordered list of distinct indices into a parent cloud of `parent_n`
/// points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSelection {
    indices: Vec<usize>,
    parent_n: usize,
}

impl SampleSelection {
    pub fn new(indices: Vec<usize>, parent_n: usize) -> Result<Self> {
        let mut seen = vec![false; parent_n];
        for &i in &indices {
            if i >= parent_n {
                return Err(Error::InvalidSelection(format!(
                    "index {i} out of range for {parent_n} points"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSelection(format!("index {i} repeated")));
            }
        }
        Ok(Self { indices, parent_n })
    }

    /// `[0, n)` in order.
    pub fn identity(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            parent_n: n,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn parent_n(&self) -> usize {
        self.parent_n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices of the parent not in this selection, ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut member = vec![false; self.parent_n];
        for &i in &self.indices {
            member[i] = true;
        }
        (0..self.parent_n).filter(|&i| !member[i]).collect()
    }

    /// Indices sorted ascending, for set comparisons.
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v
    }
}

/// Gathers `sel` out of `cloud`.
pub fn gather(cloud: &PointCloud, sel: &SampleSelection) -> Result<PointCloud> {
    cloud.gather(sel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> PointCloud {
        PointCloud::from_xyz(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::from_xyz(&[[0.0, f64::NAN, 0.0]]).is_err());
        assert!(PointCloud::from_xyz(&[[f64::INFINITY, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn rejects_bad_normals() {
        let p = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)];
        assert!(PointCloud::with_normals(p.clone(), Some(vec![Vector3::z()])).is_err());
        assert!(PointCloud::with_normals(
            p.clone(),
            Some(vec![Vector3::z(), Vector3::new(0.0, 0.0, 2.0)])
        )
        .is_err());
        assert!(PointCloud::with_normals(p, Some(vec![Vector3::z(), Vector3::x()])).is_ok());
    }

    #[test]
    fn gather_identity_is_clone() {
        let c = three();
        assert_eq!(c.gather(&SampleSelection::identity(3)).unwrap(), c);
    }

    #[test]
    fn gather_permutation() {
        let c = three();
        let g = c
            .gather(&SampleSelection::new(vec![2, 0], 3).unwrap())
            .unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.positions()[0], Point3::new(0.0, 1.0, 0.0));
        assert_eq!(g.positions()[1], Point3::origin());
    }

    #[test]
    fn gather_parent_mismatch() {
        let c = three();
        let sel = SampleSelection::new(vec![0], 4).unwrap();
        assert!(matches!(c.gather(&sel), Err(Error::InvalidSelection(_))));
    }

    #[test]
    fn selection_validation() {
        assert!(SampleSelection::new(vec![0, 0], 2).is_err());
        assert!(SampleSelection::new(vec![2], 2).is_err());
        let s = SampleSelection::new(vec![3, 1], 5).unwrap();
        assert_eq!(s.complement(), vec![0, 2, 4]);
    }

    #[test]
    fn unit_sphere_normalization() {
        let c = PointCloud::from_xyz(&[[1.0, 1.0, 1.0], [3.0, 1.0, 1.0]]).unwrap();
        let n = c.normalized_to_unit_sphere();
        assert_eq!(n.positions()[0], Point3::new(-1.0, 0.0, 0.0));
        assert_eq!(n.positions()[1], Point3::new(1.0, 0.0, 0.0));
    }
}
