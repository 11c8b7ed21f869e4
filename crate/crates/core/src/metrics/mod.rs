//! Voxel mIoU and ray-cast RayIoU / RayPQ.

pub mod iou;
pub mod rayiou;
pub mod raypq;
pub mod rays;
pub mod traverse;

pub use iou::{per_class_iou, ClassIou};
pub use rayiou::{class_tallies, pair_records, rayiou, RayIou, RayIouAt, RayRecord, Tally};
pub use raypq::{raypq, raypq_at, PqAt, RayPq, DEFAULT_MATCH_IOU};
pub use rays::{generate_rays, Ray, DEFAULT_STRIDE};
pub use traverse::{cast_rays, traverse, walk, Hit};

use crate::camera::CameraModel;
use crate::config::RAY_THRESHOLDS;
use crate::error::{Error, Result};
use crate::grid::VoxelGrid;

/// Which metric families to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSet {
    pub miou: bool,
    pub rayiou: bool,
    pub raypq: bool,
}

impl MetricSet {
    pub const ALL: Self = Self {
        miou: true,
        rayiou: true,
        raypq: true,
    };

    pub fn needs_rays(&self) -> bool {
        self.rayiou || self.raypq
    }
}

impl std::str::FromStr for MetricSet {
    type Err = Error;

    /// Comma-separated subset of `miou,rayiou,raypq`.
    fn from_str(s: &str) -> Result<Self> {
        let mut set = Self {
            miou: false,
            rayiou: false,
            raypq: false,
        };
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name.to_ascii_lowercase().as_str() {
                "miou" => set.miou = true,
                "rayiou" => set.rayiou = true,
                "raypq" => set.raypq = true,
                _ => return Err(Error::argument(format!("unknown metric '{name}'"))),
            }
        }
        if !(set.miou || set.needs_rays()) {
            return Err(Error::argument("no metrics selected"));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub stride: u32,
    pub thresholds: Vec<f64>,
    pub match_iou: f64,
    pub metrics: MetricSet,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            stride: DEFAULT_STRIDE,
            thresholds: RAY_THRESHOLDS.to_vec(),
            match_iou: DEFAULT_MATCH_IOU,
            metrics: MetricSet::ALL,
        }
    }
}

/// Everything `evaluate` computed; families that were not requested are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub class_count: usize,
    pub iou: Option<ClassIou>,
    pub rayiou: Option<RayIou>,
    pub raypq: Option<RayPq>,
    pub ray_count: usize,
}

/// Cast the same rays into both grids and pair the results.
pub fn ray_records(pred: &VoxelGrid, gt: &VoxelGrid, rays: &[Ray]) -> Result<Vec<RayRecord>> {
    gt.check_compatible(pred)?;
    pair_records(&cast_rays(gt, rays), &cast_rays(pred, rays))
}

pub fn evaluate(
    pred: &VoxelGrid,
    gt: &VoxelGrid,
    cams: &[CameraModel],
    cfg: &EvalConfig,
) -> Result<MetricReport> {
    gt.check_compatible(pred)?;
    if cfg.thresholds.is_empty() || cfg.thresholds.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::config("ray thresholds must be finite and non-negative"));
    }
    let iou = if cfg.metrics.miou {
        Some(per_class_iou(pred, gt, None)?)
    } else {
        None
    };
    let (records, ray_count) = if cfg.metrics.needs_rays() {
        let rays = generate_rays(cams, cfg.stride)?;
        (ray_records(pred, gt, &rays)?, rays.len())
    } else {
        (Vec::new(), 0)
    };
    let classes = gt.class_count();
    let free = gt.free_class() as usize;
    Ok(MetricReport {
        class_count: classes,
        iou,
        rayiou: cfg
            .metrics
            .rayiou
            .then(|| rayiou(&records, classes, free, &cfg.thresholds)),
        raypq: cfg
            .metrics
            .raypq
            .then(|| raypq(&records, &cfg.thresholds, cfg.match_iou)),
        ray_count,
    })
}
