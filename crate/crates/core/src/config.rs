//! Loss weights and the default hyperparameters of the pipeline.

use crate::error::{Error, Result};

/// Every weighting coefficient used by the loss composition, plus the focal
/// parameters and the Gaussian support factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Gaussian branch: segmentation (focal) weight.
    pub lambda1: f64,
    /// Gaussian branch: centerness weight.
    pub lambda2: f64,
    /// Gaussian branch: offset weight.
    pub lambda3: f64,
    pub lambda_sem: f64,
    pub lambda_center: f64,
    pub lambda_offset: f64,
    pub lambda_lss: f64,
    pub lambda_g: f64,
    pub lambda_edge: f64,
    pub focal_alpha_t: f64,
    pub focal_gamma: f64,
    /// Gaussians contribute within `tolerance_k * sigma` of their mean.
    pub tolerance_k: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 5.0,
            lambda2: 10.0,
            lambda3: 0.5,
            lambda_sem: 100.0,
            lambda_center: 100.0,
            lambda_offset: 100.0,
            lambda_lss: 1.0,
            lambda_g: 1.0,
            lambda_edge: 4.0,
            focal_alpha_t: 0.25,
            focal_gamma: 2.0,
            tolerance_k: 3.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda_sem", self.lambda_sem),
            ("lambda_center", self.lambda_center),
            ("lambda_offset", self.lambda_offset),
            ("lambda_lss", self.lambda_lss),
            ("lambda_g", self.lambda_g),
            ("lambda_edge", self.lambda_edge),
            ("focal_alpha_t", self.focal_alpha_t),
            ("focal_gamma", self.focal_gamma),
        ];
        for (name, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and >= 0, got {w}")));
            }
        }
        if !(self.tolerance_k.is_finite() && self.tolerance_k > 0.0) {
            return Err(Error::config(format!(
                "tolerance_k must be positive, got {}",
                self.tolerance_k
            )));
        }
        Ok(())
    }
}

/// Default hybrid blend coefficient.
pub const DEFAULT_BLEND_ALPHA: f64 = 0.6;

/// Occ3D labeling: 17 semantic classes (ids 0..=16) followed by FREE.
pub const DEFAULT_CLASS_COUNT: usize = 18;
pub const DEFAULT_FREE_CLASS: u8 = 17;
/// driveable_surface
pub const DEFAULT_GROUND_CLASS: u8 = 11;
/// bicycle, bus, car, construction_vehicle, motorcycle, pedestrian, trailer, truck
pub const DEFAULT_THING_CLASSES: [u8; 8] = [2, 3, 4, 5, 6, 7, 9, 10];

/// RayIoU / RayPQ depth tolerances in meters.
pub const RAY_THRESHOLDS: [f64; 3] = [1.0, 2.0, 4.0];
