use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub const DEFAULT_STRIDE: u32 = 8;

/// A camera ray in the ego frame with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    /// `(camera index, u, v)` of the pixel the ray was cast through.
    pub source: (usize, u32, u32),
}

impl Ray {
    /// Normalizes `direction`; zero or non-finite directions are rejected.
    pub fn new(origin: Vec3, direction: Vec3, source: (usize, u32, u32)) -> Result<Self> {
        let n = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 0.0) || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::argument("ray needs a finite origin and a nonzero direction"));
        }
        Ok(Self {
            origin,
            direction: direction.map(|d| d / n),
            source,
        })
    }

    pub fn at(&self, t: f64) -> Vec3 {
        std::array::from_fn(|k| self.origin[k] + t * self.direction[k])
    }
}

/// Pixel coordinates `(u, v)` sampled on a `stride` grid, row-major.
pub fn stride_pixels(image_size: (u32, u32), stride: u32) -> impl Iterator<Item = (u32, u32)> {
    let (w, h) = image_size;
    (0..h)
        .step_by(stride as usize)
        .flat_map(move |v| (0..w).step_by(stride as usize).map(move |u| (u, v)))
}

/// One ray per sampled pixel, ordered by camera and then row-major pixel.
pub fn generate_rays(cams: &[CameraModel], stride: u32) -> Result<Vec<Ray>> {
    if stride == 0 {
        return Err(Error::argument("ray stride must be at least 1"));
    }
    let mut rays = Vec::new();
    for (ci, cam) in cams.iter().enumerate() {
        let origin = cam.center();
        for (u, v) in stride_pixels(cam.image_size(), stride) {
            let (direction, _) = cam.ray_direction(u as f64, v as f64);
            rays.push(Ray {
                origin,
                direction,
                source: (ci, u, v),
            });
        }
    }
    Ok(rays)
}
