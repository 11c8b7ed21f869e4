//! Bird's-eye-view feature grids.

use crate::error::{Error, Result};
use crate::geometry::GridGeometry;

/// A `dims_x x dims_y x channels` feature map over the ground plane.
///
/// Storage is x-major with channels innermost:
/// `data[(x * dims_y + y) * channels + c]`. The geometry's z axis is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct BevGrid {
    geometry: GridGeometry,
    channels: usize,
    data: Vec<f64>,
}

impl BevGrid {
    pub fn zeros(geometry: GridGeometry, channels: usize) -> Self {
        let len = geometry.column_count() * channels;
        Self {
            geometry,
            channels,
            data: vec![0.0; len],
        }
    }

    pub fn from_data(geometry: GridGeometry, channels: usize, data: Vec<f64>) -> Result<Self> {
        let expected = geometry.column_count() * channels;
        if data.len() != expected {
            return Err(Error::shape(format!(
                "BEV data has {} entries, expected {expected}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::argument(format!("BEV entry {i} is not finite")));
        }
        Ok(Self {
            geometry,
            channels,
            data,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(dims_x, dims_y)`.
    pub fn size(&self) -> (usize, usize) {
        let d = self.geometry.dims();
        (d[0], d[1])
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, x: usize, y: usize) -> usize {
        self.geometry.column_index(x, y) * self.channels
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.offset(x, y) + c]
    }

    /// Feature vector of cell `(x, y)`.
    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels]
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.channels != other.channels || !self.geometry.approx_eq(&other.geometry) {
            return Err(Error::shape(format!(
                "BEV grids differ: {:?}x{} vs {:?}x{}",
                self.size(),
                self.channels,
                other.size(),
                other.channels
            )));
        }
        Ok(())
    }
}
