//! Dense semantic + instance label volumes.

use crate::error::{Error, Result};
use crate::geometry::{GridGeometry, VoxelIndex};

pub type ClassId = u8;
pub type InstanceId = u16;

/// Instance id reserved for "no instance".
pub const NO_INSTANCE: InstanceId = 0;

/// Semantic and instance labels over a [`GridGeometry`].
///
/// Instances are defined by label equality only; the voxels of one
/// instance need not be connected. Every voxel carrying an instance id has
/// a non-FREE class.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    geometry: GridGeometry,
    semantics: Vec<ClassId>,
    instances: Vec<InstanceId>,
    class_count: usize,
    free_class: ClassId,
}

impl VoxelGrid {
    /// A grid with every voxel FREE and no instances.
    pub fn empty(geometry: GridGeometry, class_count: usize, free_class: ClassId) -> Result<Self> {
        let n = geometry.voxel_count();
        Self::from_parts(
            geometry,
            vec![free_class; n],
            vec![NO_INSTANCE; n],
            class_count,
            free_class,
        )
    }

    pub fn from_parts(
        geometry: GridGeometry,
        semantics: Vec<ClassId>,
        instances: Vec<InstanceId>,
        class_count: usize,
        free_class: ClassId,
    ) -> Result<Self> {
        let n = geometry.voxel_count();
        if semantics.len() != n || instances.len() != n {
            return Err(Error::shape(format!(
                "grid has {n} voxels but {} semantic and {} instance labels",
                semantics.len(),
                instances.len()
            )));
        }
        if class_count == 0 || class_count > ClassId::MAX as usize + 1 {
            return Err(Error::config(format!("class count {class_count} out of range")));
        }
        if free_class as usize >= class_count {
            return Err(Error::config(format!(
                "free class {free_class} not below class count {class_count}"
            )));
        }
        if let Some(i) = semantics.iter().position(|&c| c as usize >= class_count) {
            return Err(Error::argument(format!(
                "voxel {i} has class {} >= class count {class_count}",
                semantics[i]
            )));
        }
        if let Some(i) = (0..n).find(|&i| instances[i] != NO_INSTANCE && semantics[i] == free_class) {
            return Err(Error::argument(format!(
                "voxel {i} carries instance {} but is FREE",
                instances[i]
            )));
        }
        Ok(Self {
            geometry,
            semantics,
            instances,
            class_count,
            free_class,
        })
    }

    pub fn into_parts(self) -> (GridGeometry, Vec<ClassId>, Vec<InstanceId>) {
        (self.geometry, self.semantics, self.instances)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn semantics(&self) -> &[ClassId] {
        &self.semantics
    }

    pub fn instances(&self) -> &[InstanceId] {
        &self.instances
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn free_class(&self) -> ClassId {
        self.free_class
    }

    #[inline]
    pub fn class_at(&self, idx: VoxelIndex) -> ClassId {
        self.semantics[self.geometry.flat_index(idx)]
    }

    #[inline]
    pub fn instance_at(&self, idx: VoxelIndex) -> InstanceId {
        self.instances[self.geometry.flat_index(idx)]
    }

    #[inline]
    pub fn is_occupied(&self, idx: VoxelIndex) -> bool {
        self.class_at(idx) != self.free_class
    }

    /// Distinct nonzero instance ids in ascending order.
    pub fn instance_ids(&self) -> Vec<InstanceId> {
        let mut ids: Vec<InstanceId> = self
            .instances
            .iter()
            .copied()
            .filter(|&i| i != NO_INSTANCE)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Whether two grids can be compared voxel for voxel.
    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.geometry.approx_eq(&other.geometry) {
            return Err(Error::shape(format!(
                "grid geometries differ: {:?} vs {:?}",
                self.geometry, other.geometry
            )));
        }
        if self.class_count != other.class_count || self.free_class != other.free_class {
            return Err(Error::shape(format!(
                "class layouts differ: {}/{} vs {}/{}",
                self.class_count, self.free_class, other.class_count, other.free_class
            )));
        }
        Ok(())
    }
}
