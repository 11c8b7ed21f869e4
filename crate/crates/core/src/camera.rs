//! Pinhole cameras and multi-camera rigs.
//!
//! Camera frame: x right, y down, z forward. A pixel `(u, v)` at depth `d`
//! unprojects to `(d (u - cx) / fx, d (v - cy) / fy, d)`; the extrinsic then
//! maps camera coordinates into the ego frame (x forward, y left, z up).

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const ORTHONORMAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    name: String,
    intrinsics: Matrix3<f64>,
    extrinsic: Matrix4<f64>,
    image_size: (u32, u32),
}

impl CameraModel {
    /// `intrinsics` and `extrinsic` are row-major; the extrinsic maps camera
    /// coordinates to ego coordinates.
    pub fn new(
        name: impl Into<String>,
        intrinsics: [f64; 9],
        extrinsic: [f64; 16],
        image_size: (u32, u32),
    ) -> Result<Self> {
        let k = Matrix3::from_row_slice(&intrinsics);
        let e = Matrix4::from_row_slice(&extrinsic);
        if k.iter().chain(e.iter()).any(|v| !v.is_finite()) {
            return Err(Error::config("camera matrices must be finite"));
        }
        if !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0) {
            return Err(Error::config(format!(
                "focal lengths must be positive, got fx={} fy={}",
                k[(0, 0)],
                k[(1, 1)]
            )));
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
            return Err(Error::config("intrinsics must be upper triangular"));
        }
        if k[(2, 2)] <= 0.0 {
            return Err(Error::config("intrinsics matrix is singular"));
        }

        let r = e.fixed_view::<3, 3>(0, 0).into_owned();
        let gram = r.transpose() * r;
        if (gram - Matrix3::identity()).amax() > ORTHONORMAL_TOLERANCE {
            return Err(Error::config("extrinsic rotation is not orthonormal"));
        }
        if (r.determinant() - 1.0).abs() > ORTHONORMAL_TOLERANCE {
            return Err(Error::config("extrinsic rotation is a reflection"));
        }
        if e.row(3).iter().ne([0.0, 0.0, 0.0, 1.0].iter()) {
            return Err(Error::config("extrinsic bottom row must be [0, 0, 0, 1]"));
        }
        if image_size.0 == 0 || image_size.1 == 0 {
            return Err(Error::config("image size must be positive"));
        }
        Ok(Self {
            name: name.into(),
            intrinsics: k,
            extrinsic: e,
            image_size,
        })
    }

    /// A camera at `position` (ego meters) whose optical axis points along
    /// ego heading `yaw` (radians, counter-clockwise from +x) tilted by
    /// `pitch` (radians, positive looks up), with the principal point at the
    /// image center.
    pub fn looking(
        name: impl Into<String>,
        position: Vec3,
        yaw: f64,
        pitch: f64,
        focal: f64,
        image_size: (u32, u32),
    ) -> Result<Self> {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let forward = Vector3::new(cp * cy, cp * sy, sp);
        let left = Vector3::new(-sy, cy, 0.0);
        let up = forward.cross(&left);
        // Columns: camera x (right), y (down), z (forward) in ego coordinates.
        let r = Matrix3::from_columns(&[-left, -up, forward]);
        let mut e = [0.0; 16];
        for row in 0..3 {
            for col in 0..3 {
                e[row * 4 + col] = r[(row, col)];
            }
            e[row * 4 + 3] = position[row];
        }
        e[15] = 1.0;
        let (w, h) = image_size;
        let k = [
            focal,
            0.0,
            w as f64 / 2.0,
            0.0,
            focal,
            h as f64 / 2.0,
            0.0,
            0.0,
            1.0,
        ];
        Self::new(name, k, e, image_size)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn image_size(&self) -> (u32, u32) {
        self.image_size
    }

    /// Row-major intrinsics.
    pub fn intrinsics(&self) -> [f64; 9] {
        std::array::from_fn(|i| self.intrinsics[(i / 3, i % 3)])
    }

    /// Row-major camera-to-ego transform.
    pub fn extrinsic(&self) -> [f64; 16] {
        std::array::from_fn(|i| self.extrinsic[(i / 4, i % 4)])
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.image_size.0 as f64 && v < self.image_size.1 as f64
    }

    /// Back-substitution of `K [x, y, 1]^T ~ [u, v, 1]^T`.
    fn pixel_ray(&self, u: f64, v: f64) -> Vector3<f64> {
        let k = &self.intrinsics;
        let w = 1.0 / k[(2, 2)];
        let y = (v - k[(1, 2)] * w) / k[(1, 1)];
        let x = (u - k[(0, 1)] * y - k[(0, 2)] * w) / k[(0, 0)];
        Vector3::new(x / w, y / w, 1.0)
    }

    /// Camera-frame point for pixel `(u, v)` at depth `d` along the optical axis.
    pub fn unproject_camera(&self, u: f64, v: f64, d: f64) -> Vec3 {
        let ray = self.pixel_ray(u, v);
        [d * ray.x, d * ray.y, d]
    }

    /// Ego-frame point for pixel `(u, v)` at depth `d`.
    pub fn unproject(&self, u: f64, v: f64, d: f64) -> Vec3 {
        self.camera_to_ego(self.unproject_camera(u, v, d))
    }

    pub fn camera_to_ego(&self, p: Vec3) -> Vec3 {
        let q = self.extrinsic * Vector4::new(p[0], p[1], p[2], 1.0);
        [q.x, q.y, q.z]
    }

    /// Optical center in the ego frame.
    pub fn center(&self) -> Vec3 {
        [
            self.extrinsic[(0, 3)],
            self.extrinsic[(1, 3)],
            self.extrinsic[(2, 3)],
        ]
    }

    /// Unit ego-frame direction of the ray through pixel `(u, v)`, together
    /// with the camera-frame z component of that unit direction (the factor
    /// converting ray distance to depth).
    pub fn ray_direction(&self, u: f64, v: f64) -> (Vec3, f64) {
        let ray = self.pixel_ray(u, v).normalize();
        let r = self.extrinsic.fixed_view::<3, 3>(0, 0);
        let d = r * ray;
        ([d.x, d.y, d.z], ray.z)
    }
}

/// Image size of the camera rig inputs (width, height).
pub const RIG_IMAGE_SIZE: (u32, u32) = (704, 256);

/// Six cameras at `height` meters above the ego origin, spaced 60 degrees
/// apart in yaw starting straight ahead, each with a 704x256 image.
pub fn surround_rig(height: f64) -> Vec<CameraModel> {
    const NAMES: [&str; 6] = [
        "CAM_FRONT",
        "CAM_FRONT_LEFT",
        "CAM_BACK_LEFT",
        "CAM_BACK",
        "CAM_BACK_RIGHT",
        "CAM_FRONT_RIGHT",
    ];
    // ~70 degree horizontal field of view
    let focal = RIG_IMAGE_SIZE.0 as f64 / 2.0 / (35f64.to_radians()).tan();
    NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let yaw = (i as f64 * 60.0).to_radians();
            CameraModel::looking(*name, [0.0, 0.0, height], yaw, 0.0, focal, RIG_IMAGE_SIZE)
                .expect("rig camera is valid")
        })
        .collect()
}
