//! Axis-aligned voxel grid geometry and world/voxel coordinate transforms.
//!
//! Voxels are addressed x-major: `flat = (x * dims_y + y) * dims_z + z`.
//! Lower range bounds are inclusive and upper bounds exclusive.

use crate::error::{Error, Result};

/// A point or vector in ego-frame meters.
pub type Vec3 = [f64; 3];

/// Integer voxel coordinates `(x, y, z)`.
pub type VoxelIndex = [usize; 3];

const RANGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    min: Vec3,
    max: Vec3,
    voxel_size: Vec3,
    dims: [usize; 3],
}

impl GridGeometry {
    /// Build a geometry from inclusive lower and exclusive upper corners.
    ///
    /// Cell counts are derived as `round(extent / voxel_size)` and must
    /// reconstruct each extent to within 1e-9 m.
    pub fn new(min: Vec3, max: Vec3, voxel_size: Vec3) -> Result<Self> {
        let mut dims = [0usize; 3];
        for k in 0..3 {
            let vs = voxel_size[k];
            if !(vs.is_finite() && vs > 0.0) {
                return Err(Error::config(format!(
                    "voxel size on axis {k} must be positive, got {vs}"
                )));
            }
            if !(min[k].is_finite() && max[k].is_finite() && max[k] > min[k]) {
                return Err(Error::config(format!(
                    "axis {k} range [{}, {}) is empty or non-finite",
                    min[k], max[k]
                )));
            }
            let extent = max[k] - min[k];
            let n = (extent / vs).round();
            if n < 1.0 || (n * vs - extent).abs() > RANGE_TOLERANCE {
                return Err(Error::config(format!(
                    "axis {k} extent {extent} m is not a whole number of {vs} m voxels"
                )));
            }
            dims[k] = n as usize;
        }
        Ok(Self {
            min,
            max,
            voxel_size,
            dims,
        })
    }

    /// Build a geometry from its lower corner, voxel size and cell counts.
    pub fn from_origin(origin: Vec3, voxel_size: Vec3, dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::config(format!("grid dims must be positive, got {dims:?}")));
        }
        let max = std::array::from_fn(|k| origin[k] + dims[k] as f64 * voxel_size[k]);
        let g = Self::new(origin, max, voxel_size)?;
        if g.dims != dims {
            return Err(Error::config(format!(
                "dims {dims:?} do not survive the range round trip (got {:?})",
                g.dims
            )));
        }
        Ok(g)
    }

    pub fn min(&self) -> Vec3 {
        self.min
    }

    pub fn max(&self) -> Vec3 {
        self.max
    }

    pub fn voxel_size(&self) -> Vec3 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.min[0], self.max[0])
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.min[1], self.max[1])
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.min[2], self.max[2])
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of BEV (x, y) columns.
    pub fn column_count(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    #[inline]
    pub fn flat_index(&self, idx: VoxelIndex) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    #[inline]
    pub fn unflatten(&self, flat: usize) -> VoxelIndex {
        let z = flat % self.dims[2];
        let xy = flat / self.dims[2];
        [xy / self.dims[1], xy % self.dims[1], z]
    }

    /// Flat BEV column index for `(x, y)`.
    #[inline]
    pub fn column_index(&self, x: usize, y: usize) -> usize {
        x * self.dims[1] + y
    }

    /// Voxel containing `p`, or `None` when `p` lies outside the grid.
    pub fn world_to_voxel(&self, p: Vec3) -> Option<VoxelIndex> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            if !(p[k] >= self.min[k] && p[k] < self.max[k]) {
                return None;
            }
            let i = ((p[k] - self.min[k]) / self.voxel_size[k]).floor() as usize;
            // p just below max can round up to dims[k].
            idx[k] = i.min(self.dims[k] - 1);
        }
        Some(idx)
    }

    pub fn voxel_center(&self, idx: VoxelIndex) -> Vec3 {
        std::array::from_fn(|k| self.min[k] + (idx[k] as f64 + 0.5) * self.voxel_size[k])
    }

    /// Lower corner of a voxel.
    pub fn voxel_min(&self, idx: VoxelIndex) -> Vec3 {
        std::array::from_fn(|k| self.min[k] + idx[k] as f64 * self.voxel_size[k])
    }

    /// BEV cell containing the horizontal position `(x, y)`.
    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(x >= self.min[0] && x < self.max[0] && y >= self.min[1] && y < self.max[1]) {
            return None;
        }
        let ix = ((x - self.min[0]) / self.voxel_size[0]).floor() as usize;
        let iy = ((y - self.min[1]) / self.voxel_size[1]).floor() as usize;
        Some((ix.min(self.dims[0] - 1), iy.min(self.dims[1] - 1)))
    }

    /// Horizontal center of BEV cell `(x, y)`.
    pub fn cell_center(&self, x: usize, y: usize) -> (f64, f64) {
        (
            self.min[0] + (x as f64 + 0.5) * self.voxel_size[0],
            self.min[1] + (y as f64 + 0.5) * self.voxel_size[1],
        )
    }

    /// Equality up to floating noise in the stored ranges.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && (0..3).all(|k| {
                (self.min[k] - other.min[k]).abs() <= RANGE_TOLERANCE
                    && (self.voxel_size[k] - other.voxel_size[k]).abs() <= RANGE_TOLERANCE
            })
    }
}

/// The Occ3D-nuScenes grid: x, y in [-40, 40) m, z in [-1, 5.4) m, 0.4 m voxels.
pub fn official_geometry() -> GridGeometry {
    GridGeometry::new([-40.0, -40.0, -1.0], [40.0, 40.0, 5.4], [0.4, 0.4, 0.4])
        .expect("official geometry is valid")
}
