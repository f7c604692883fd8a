//! Point-cloud preprocessing: voxel-grid downsampling, range cropping and
//! voxelization for indoor (operating-room scale) scenes.
//!
//! All intervals are half-open `[min, max)` with floor indexing, so a point
//! exactly on a cell's upper face belongs to the next cell and points on the
//! global upper face are dropped.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Box3D;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
}

impl Point {
    pub const fn new(x: f32, y: f32, z: f32, intensity: f32) -> Self {
        Self { x, y, z, intensity }
    }

    pub fn xyz(&self) -> [f64; 3] {
        [f64::from(self.x), f64::from(self.y), f64::from(self.z)]
    }

    pub fn to_bits(&self) -> [u32; 4] {
        [self.x.to_bits(), self.y.to_bits(), self.z.to_bits(), self.intensity.to_bits()]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub source_id: String,
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(source_id: impl Into<String>, points: Vec<Point>) -> Self {
        Self {
            source_id: source_id.into(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fails on the first point with a non-finite coordinate.
    pub fn validate(&self) -> Result<()> {
        match self
            .points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            Some(i) => Err(Error::record(i, "non-finite point coordinate")),
            None => Ok(()),
        }
    }
}

/// Axis-aligned region of interest in metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl RangeSpec {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for axis in 0..3 {
            if !(min[axis].is_finite() && max[axis].is_finite() && min[axis] < max[axis]) {
                return Err(Error::InvalidValue(format!(
                    "range axis {axis}: need finite min < max, got [{}, {})",
                    min[axis], max[axis]
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Parses `x_min,x_max,y_min,y_max,z_min,z_max`.
    pub fn parse(s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidValue(format!("bad range {s:?}")))?;
        if v.len() != 6 {
            return Err(Error::InvalidValue(format!("range needs 6 values, got {}", v.len())));
        }
        Self::new([v[0], v[2], v[4]], [v[1], v[3], v[5]])
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }

    pub fn contains(&self, p: &Point) -> bool {
        let c = p.xyz();
        (0..3).all(|a| self.min[a] <= c[a] && c[a] < self.max[a])
    }
}

/// Toolkit default region: ±3 m horizontally, 0–3 m vertically.
pub const DEFAULT_RANGE: RangeSpec = RangeSpec {
    min: [-3.0, -3.0, 0.0],
    max: [3.0, 3.0, 3.0],
};

/// Toolkit default voxel edge in metres.
pub const DEFAULT_VOXEL_SIZE: f64 = 0.05;

/// Replaces the points of every occupied `leaf`-sized cell by their
/// centroid (intensity averaged too). Output is ordered by cell index.
pub fn voxel_downsample(pc: &PointCloud, leaf: f64) -> Result<PointCloud> {
    if !(leaf.is_finite() && leaf > 0.0) {
        return Err(Error::InvalidValue(format!("leaf size must be positive, got {leaf}")));
    }
    let mut cells: HashMap<[i64; 3], [f64; 5]> = HashMap::new();
    for p in &pc.points {
        let c = p.xyz();
        let key = [
            (c[0] / leaf).floor() as i64,
            (c[1] / leaf).floor() as i64,
            (c[2] / leaf).floor() as i64,
        ];
        let acc = cells.entry(key).or_default();
        acc[0] += c[0];
        acc[1] += c[1];
        acc[2] += c[2];
        acc[3] += f64::from(p.intensity);
        acc[4] += 1.0;
    }
    let mut cells: Vec<_> = cells.into_iter().collect();
    cells.sort_unstable_by_key(|(k, _)| *k);
    let points = cells
        .into_iter()
        .map(|(_, a)| {
            let n = a[4];
            Point::new((a[0] / n) as f32, (a[1] / n) as f32, (a[2] / n) as f32, (a[3] / n) as f32)
        })
        .collect();
    Ok(PointCloud::new(pc.source_id.clone(), points))
}

/// Keeps points with `min <= coord < max` on every axis, in input order.
pub fn crop_range(pc: &PointCloud, range: &RangeSpec) -> PointCloud {
    PointCloud::new(
        pc.source_id.clone(),
        pc.points.iter().copied().filter(|p| range.contains(p)).collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Voxel {
    pub index: [usize; 3],
    /// Points that fell in this voxel, including truncated ones.
    pub count: usize,
    /// The first `max_points_per_voxel` points in input order.
    pub points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub voxel_size: [f64; 3],
    pub range: RangeSpec,
    pub dims: [usize; 3],
    pub max_points_per_voxel: usize,
    /// Occupied voxels sorted by index.
    pub voxels: Vec<Voxel>,
}

/// Occupancy and truncation statistics of a [`VoxelGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelSummary {
    pub dims: [usize; 3],
    pub voxel_size: [f64; 3],
    pub occupied_voxels: usize,
    pub points_in_range: usize,
    pub stored_points: usize,
    pub truncated_voxels: usize,
    pub max_count: usize,
}

/// `ceil(extent / voxel)` per axis.
pub fn grid_dims(range: &RangeSpec, voxel_size: [f64; 3]) -> [usize; 3] {
    let e = range.extent();
    [0, 1, 2].map(|a| (e[a] / voxel_size[a]).ceil() as usize)
}

impl VoxelGrid {
    /// Index of the voxel containing `p`, or `None` outside the range.
    pub fn index_of(&self, p: &Point) -> Option<[usize; 3]> {
        voxel_index(p, &self.range, self.voxel_size, self.dims)
    }

    pub fn get(&self, index: [usize; 3]) -> Option<&Voxel> {
        self.voxels
            .binary_search_by(|v| v.index.cmp(&index))
            .ok()
            .map(|i| &self.voxels[i])
    }

    pub fn voxel_bounds(&self, index: [usize; 3]) -> ([f64; 3], [f64; 3]) {
        let lo = [0, 1, 2].map(|a| self.range.min[a] + index[a] as f64 * self.voxel_size[a]);
        let hi = [0, 1, 2].map(|a| lo[a] + self.voxel_size[a]);
        (lo, hi)
    }

    pub fn summary(&self) -> VoxelSummary {
        VoxelSummary {
            dims: self.dims,
            voxel_size: self.voxel_size,
            occupied_voxels: self.voxels.len(),
            points_in_range: self.voxels.iter().map(|v| v.count).sum(),
            stored_points: self.voxels.iter().map(|v| v.points.len()).sum(),
            truncated_voxels: self.voxels.iter().filter(|v| v.count > v.points.len()).count(),
            max_count: self.voxels.iter().map(|v| v.count).max().unwrap_or(0),
        }
    }
}

fn voxel_index(p: &Point, range: &RangeSpec, voxel_size: [f64; 3], dims: [usize; 3]) -> Option<[usize; 3]> {
    if !range.contains(p) {
        return None;
    }
    let c = p.xyz();
    // A coordinate just below max can round up to `dims` after division.
    Some([0, 1, 2].map(|a| (((c[a] - range.min[a]) / voxel_size[a]).floor() as usize).min(dims[a] - 1)))
}

/// Buckets in-range points into voxels, keeping at most
/// `max_points_per_voxel` per voxel while counting all of them.
pub fn voxelize(
    pc: &PointCloud,
    voxel_size: [f64; 3],
    range: &RangeSpec,
    max_points_per_voxel: usize,
) -> Result<VoxelGrid> {
    if voxel_size.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidValue(format!("voxel size must be positive, got {voxel_size:?}")));
    }
    if max_points_per_voxel == 0 {
        return Err(Error::InvalidValue("max points per voxel must be at least 1".into()));
    }
    let range = RangeSpec::new(range.min, range.max)?;
    let dims = grid_dims(&range, voxel_size);
    let mut slots: HashMap<[usize; 3], usize> = HashMap::new();
    let mut voxels: Vec<Voxel> = Vec::new();
    for p in &pc.points {
        let Some(index) = voxel_index(p, &range, voxel_size, dims) else {
            continue;
        };
        let slot = *slots.entry(index).or_insert_with(|| {
            voxels.push(Voxel {
                index,
                count: 0,
                points: Vec::new(),
            });
            voxels.len() - 1
        });
        let v = &mut voxels[slot];
        v.count += 1;
        if v.points.len() < max_points_per_voxel {
            v.points.push(*p);
        }
    }
    voxels.sort_unstable_by_key(|v| v.index);
    Ok(VoxelGrid {
        voxel_size,
        range,
        dims,
        max_points_per_voxel,
        voxels,
    })
}

/// Per-axis mean extents of a set of boxes, used as the detector's anchor
/// size for the dominant object class.
pub fn anchor_size_estimate(boxes: &[Box3D]) -> Result<[f64; 3]> {
    if boxes.is_empty() {
        return Err(Error::InvalidValue("anchor size needs at least one box".into()));
    }
    let n = boxes.len() as f64;
    let sum = boxes
        .iter()
        .fold([0.0; 3], |acc, b| [acc[0] + b.dx, acc[1] + b.dy, acc[2] + b.dz]);
    Ok(sum.map(|s| s / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f32; 3]]) -> PointCloud {
        PointCloud::new("t", points.iter().map(|&[x, y, z]| Point::new(x, y, z, 1.0)).collect())
    }

    #[test]
    fn single_leaf_gives_centroid() {
        let pc = cloud(&[[0.1, 0.1, 0.1], [0.3, 0.2, 0.4], [0.2, 0.3, 0.1]]);
        let out = voxel_downsample(&pc, 1.0).unwrap();
        assert_eq!(out.len(), 1);
        let p = out.points[0];
        assert!((p.x - 0.2).abs() < 1e-6 && (p.y - 0.2).abs() < 1e-6 && (p.z - 0.2).abs() < 1e-6);
        assert_eq!(p.intensity, 1.0);
    }

    #[test]
    fn grid_points_are_preserved() {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..3 {
                pts.push([i as f32 * 0.5, j as f32 * 0.5, 0.0]);
            }
        }
        let out = voxel_downsample(&cloud(&pts), 0.5).unwrap();
        assert_eq!(out.len(), pts.len());
    }

    #[test]
    fn downsample_rejects_bad_leaf() {
        assert!(voxel_downsample(&cloud(&[]), 0.0).is_err());
        assert!(voxel_downsample(&cloud(&[]), f64::NAN).is_err());
    }

    #[test]
    fn crop_is_half_open() {
        let range = RangeSpec::new([0.0; 3], [1.0; 3]).unwrap();
        let pc = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.5, 0.5], [0.999, 0.5, 0.5]]);
        let out = crop_range(&pc, &range);
        assert_eq!(out.len(), 2);
        assert_eq!(crop_range(&out, &range), out);
        let far = RangeSpec::new([10.0; 3], [11.0; 3]).unwrap();
        assert!(crop_range(&pc, &far).is_empty());
    }

    #[test]
    fn range_validation_and_parse() {
        assert!(RangeSpec::new([0.0; 3], [0.0, 1.0, 1.0]).is_err());
        let r = RangeSpec::parse("-3,3,-3,3,0,3").unwrap();
        assert_eq!(r, DEFAULT_RANGE);
        assert!(RangeSpec::parse("1,2,3").is_err());
    }

    #[test]
    fn grid_dimensions() {
        let range = RangeSpec::new([0.0; 3], [4.0; 3]).unwrap();
        let grid = voxelize(&cloud(&[]), [1.0; 3], &range, 5).unwrap();
        assert_eq!(grid.dims, [4, 4, 4]);
        let range = RangeSpec::new([0.0; 3], [4.5, 4.0, 0.1]).unwrap();
        assert_eq!(grid_dims(&range, [1.0, 1.0, 0.03]), [5, 4, 4]);
    }

    #[test]
    fn truncation_keeps_input_order() {
        let range = RangeSpec::new([0.0; 3], [4.0; 3]).unwrap();
        let pts: Vec<[f32; 3]> = (0..10).map(|i| [0.05 * i as f32, 0.5, 0.5]).collect();
        let grid = voxelize(&cloud(&pts), [1.0; 3], &range, 5).unwrap();
        assert_eq!(grid.voxels.len(), 1);
        let v = &grid.voxels[0];
        assert_eq!((v.count, v.points.len()), (10, 5));
        assert_eq!(v.points[4].x, pts[4][0]);
        let s = grid.summary();
        assert_eq!((s.points_in_range, s.stored_points, s.truncated_voxels), (10, 5, 1));
    }

    #[test]
    fn stored_points_lie_in_their_voxel() {
        let range = RangeSpec::new([-1.0; 3], [1.0; 3]).unwrap();
        let pts: Vec<[f32; 3]> = (0..50)
            .map(|i| {
                let t = i as f32 / 50.0;
                [2.0 * t - 1.0, (t * 7.0).sin(), (t * 3.0).cos() - 0.5]
            })
            .collect();
        let grid = voxelize(&cloud(&pts), [0.3, 0.25, 0.5], &range, 100).unwrap();
        for v in &grid.voxels {
            let (lo, hi) = grid.voxel_bounds(v.index);
            for p in &v.points {
                let c = p.xyz();
                assert_eq!(grid.index_of(p), Some(v.index));
                for a in 0..3 {
                    assert!(lo[a] <= c[a] && c[a] < hi[a] + 1e-12);
                }
            }
        }
        assert_eq!(grid.get(grid.voxels[0].index), Some(&grid.voxels[0]));
    }

    #[test]
    fn voxelize_rejects_bad_parameters() {
        let r = DEFAULT_RANGE;
        assert!(voxelize(&cloud(&[]), [0.0, 1.0, 1.0], &r, 1).is_err());
        assert!(voxelize(&cloud(&[]), [1.0; 3], &r, 0).is_err());
    }

    #[test]
    fn anchor_sizes() {
        let a = Box3D::new(0.0, 0.0, 0.0, 0.4, 0.4, 1.6, 0.0).unwrap();
        let b = Box3D::new(5.0, 1.0, 0.0, 0.8, 0.8, 2.0, 1.0).unwrap();
        let m = anchor_size_estimate(&[a, b]).unwrap();
        for (got, want) in m.iter().zip([0.6, 0.6, 1.8]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(anchor_size_estimate(&[b, a]).unwrap(), m);
        assert_eq!(anchor_size_estimate(&[a, a]).unwrap(), [0.4, 0.4, 1.6]);
        assert!(anchor_size_estimate(&[]).is_err());
    }
}
