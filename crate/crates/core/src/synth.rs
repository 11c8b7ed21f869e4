//! Deterministic procedural scenes and synthetic per-pixel lifting inputs.
//!
//! Scene generation draws from [`SplitMix64`] seeded with `spec.seed`, in
//! this order, so any implementation of the generator reproduces the scene:
//!
//! 1. The ground layer (`z = 0`) is filled with the ground class.
//! 2. For each object `i = 1..=object_count`, up to [`MAX_ATTEMPTS`] boxes
//!    are drawn as `sx = range(2, max_xy)`, `sy = range(2, max_xy)`,
//!    `sz = range(2, max_z)`, `x = range(0, dx - sx)`, `y = range(0, dy - sy)`,
//!    `class = palette[below(len)]`, where `range` is
//!    [`SplitMix64::range_inclusive`], `max_xy = clamp(min(dx, dy) / 4, 2, 12)`
//!    and `max_z = min(6, dz - 1)`. Boxes sit on the ground (`z = 1..=sz`).
//!    A draw is rejected if it touches an earlier object or its one-voxel
//!    margin contains a camera center; the first accepted box becomes
//!    instance `i`.

use crate::camera::{surround_rig, CameraModel};
use crate::config::{DEFAULT_CLASS_COUNT, DEFAULT_FREE_CLASS, DEFAULT_GROUND_CLASS, DEFAULT_THING_CLASSES};
use crate::error::{Error, Result};
use crate::geometry::{official_geometry, GridGeometry, Vec3};
use crate::grid::{ClassId, InstanceId, VoxelGrid, NO_INSTANCE};
use crate::lift::{DepthBinning, GaussianPrimitive, PixelLift};
use crate::metrics::rays::{stride_pixels, Ray};
use crate::metrics::traverse::{traverse, Hit};
use crate::rng::SplitMix64;

pub const MAX_ATTEMPTS: usize = 200;
/// Height of the default rig above the ego origin, meters.
pub const RIG_HEIGHT: f64 = 1.5;
/// Smallest Gaussian extent used when the requested noise is zero.
pub const MIN_GAUSSIAN_SIGMA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub object_count: usize,
    pub class_palette: Vec<ClassId>,
    pub extent: GridGeometry,
    pub rig: Vec<CameraModel>,
    pub class_count: usize,
    pub free_class: ClassId,
    pub ground_class: ClassId,
}

impl SceneSpec {
    /// Official grid, six-camera rig, the default thing classes.
    pub fn new(seed: u64, object_count: usize) -> Self {
        Self {
            seed,
            object_count,
            class_palette: DEFAULT_THING_CLASSES.to_vec(),
            extent: official_geometry(),
            rig: surround_rig(RIG_HEIGHT),
            class_count: DEFAULT_CLASS_COUNT,
            free_class: DEFAULT_FREE_CLASS,
            ground_class: DEFAULT_GROUND_CLASS,
        }
    }

    pub fn with_extent(mut self, extent: GridGeometry) -> Self {
        self.extent = extent;
        self
    }

    pub fn with_rig(mut self, rig: Vec<CameraModel>) -> Self {
        self.rig = rig;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.object_count > 0 && self.class_palette.is_empty() {
            return Err(Error::config("class palette is empty but objects were requested"));
        }
        if self.object_count > InstanceId::MAX as usize {
            return Err(Error::config(format!("too many objects: {}", self.object_count)));
        }
        let bad = |c: ClassId| c as usize >= self.class_count || c == self.free_class;
        if bad(self.ground_class) || self.class_palette.iter().any(|&c| bad(c)) {
            return Err(Error::config("palette and ground classes must be valid non-FREE ids"));
        }
        Ok(())
    }
}

/// Generate the labeled scene described by `spec`.
pub fn synth_scene(spec: &SceneSpec) -> Result<VoxelGrid> {
    spec.validate()?;
    let g = spec.extent;
    let [dx, dy, dz] = g.dims();
    let n = g.voxel_count();
    let mut sem = vec![spec.free_class; n];
    let mut inst = vec![NO_INSTANCE; n];
    for x in 0..dx {
        for y in 0..dy {
            sem[g.flat_index([x, y, 0])] = spec.ground_class;
        }
    }
    if spec.object_count == 0 {
        return VoxelGrid::from_parts(g, sem, inst, spec.class_count, spec.free_class);
    }
    if dx < 2 || dy < 2 || dz < 3 {
        return Err(Error::Generation(format!("grid {:?} is too small for any object", g.dims())));
    }

    let max_xy = (dx.min(dy) / 4).clamp(2, 12);
    let max_z = 6.min(dz - 1);
    let cameras: Vec<Vec3> = spec.rig.iter().map(CameraModel::center).collect();
    let mut rng = SplitMix64::new(spec.seed);
    for id in 1..=spec.object_count {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let sx = rng.range_inclusive(2, max_xy.min(dx));
            let sy = rng.range_inclusive(2, max_xy.min(dy));
            let sz = rng.range_inclusive(2, max_z);
            let x0 = rng.range_inclusive(0, dx - sx);
            let y0 = rng.range_inclusive(0, dy - sy);
            let class = spec.class_palette[rng.below(spec.class_palette.len() as u64) as usize];
            let (lo, hi) = ([x0, y0, 1], [x0 + sx, y0 + sy, 1 + sz]);
            if blocks_camera(&g, lo, hi, &cameras) || touches_object(&g, &inst, lo, hi) {
                continue;
            }
            for x in lo[0]..hi[0] {
                for y in lo[1]..hi[1] {
                    for z in lo[2]..hi[2] {
                        let f = g.flat_index([x, y, z]);
                        sem[f] = class;
                        inst[f] = id as InstanceId;
                    }
                }
            }
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Generation(format!(
                "could not place object {id} after {MAX_ATTEMPTS} attempts"
            )));
        }
    }
    VoxelGrid::from_parts(g, sem, inst, spec.class_count, spec.free_class)
}

fn blocks_camera(g: &GridGeometry, lo: [usize; 3], hi: [usize; 3], cameras: &[Vec3]) -> bool {
    let vs = g.voxel_size();
    let min = g.voxel_min(lo);
    let max = g.voxel_min(hi);
    cameras
        .iter()
        .any(|c| (0..3).all(|k| c[k] >= min[k] - vs[k] && c[k] < max[k] + vs[k]))
}

fn touches_object(g: &GridGeometry, inst: &[InstanceId], lo: [usize; 3], hi: [usize; 3]) -> bool {
    (lo[0]..hi[0]).any(|x| {
        (lo[1]..hi[1]).any(|y| (lo[2]..hi[2]).any(|z| inst[g.flat_index([x, y, z])] != NO_INSTANCE))
    })
}

/// Translate every instance voxel by `shift` meters (a whole number of
/// voxels per axis), optionally removing one instance. Moved voxels leaving
/// the grid are dropped and never overwrite non-FREE stuff voxels.
pub fn perturb_scene(grid: &VoxelGrid, shift: Vec3, drop_instance: Option<InstanceId>) -> Result<VoxelGrid> {
    let g = *grid.geometry();
    let vs = g.voxel_size();
    let mut steps = [0i64; 3];
    for k in 0..3 {
        let s = shift[k] / vs[k];
        let r = s.round();
        if !s.is_finite() || (s - r).abs() > 1e-6 {
            return Err(Error::argument(format!(
                "shift {} m on axis {k} is not a multiple of the {} m voxel size",
                shift[k], vs[k]
            )));
        }
        steps[k] = r as i64;
    }
    let free = grid.free_class();
    let mut sem = grid.semantics().to_vec();
    let mut inst = vec![NO_INSTANCE; sem.len()];
    for (f, &id) in grid.instances().iter().enumerate() {
        if id != NO_INSTANCE {
            sem[f] = free;
        }
    }
    let stuff = sem.clone();
    let dims = g.dims();
    for (f, &id) in grid.instances().iter().enumerate() {
        if id == NO_INSTANCE || Some(id) == drop_instance {
            continue;
        }
        let idx = g.unflatten(f);
        let mut target = [0usize; 3];
        let mut inside = true;
        for k in 0..3 {
            let t = idx[k] as i64 + steps[k];
            if t < 0 || t >= dims[k] as i64 {
                inside = false;
                break;
            }
            target[k] = t as usize;
        }
        if !inside {
            continue;
        }
        let tf = g.flat_index(target);
        if stuff[tf] == free {
            sem[tf] = grid.semantics()[f];
            inst[tf] = id;
        }
    }
    VoxelGrid::from_parts(g, sem, inst, grid.class_count(), free)
}

/// Synthetic backbone outputs for one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthLifts {
    pub lifts: Vec<PixelLift>,
    pub gaussians: Vec<GaussianPrimitive>,
    /// Ground-truth hit per emitted pixel, aligned with `lifts`.
    pub hits: Vec<Hit>,
}

/// For every pixel on the `stride` grid whose ray hits the scene within the
/// binning range: a depth distribution discretized from a normal around the
/// true optical-axis depth, a one-hot class feature, and a Gaussian at the
/// hit point with per-axis extent `noise_sigma`.
pub fn synth_pixel_lifts(
    grid: &VoxelGrid,
    cam: &CameraModel,
    camera_index: usize,
    binning: &DepthBinning,
    noise_sigma: f64,
    stride: u32,
) -> Result<SynthLifts> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::argument(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    if stride == 0 {
        return Err(Error::argument("stride must be at least 1"));
    }
    let classes = grid.class_count();
    let origin = cam.center();
    let pixels: Vec<(u32, u32)> = stride_pixels(cam.image_size(), stride).collect();
    let per_pixel = crate::par::map(&pixels, |&(u, v)| -> Result<Option<(PixelLift, GaussianPrimitive, Hit)>> {
        let (direction, axial) = cam.ray_direction(u as f64, v as f64);
        let ray = Ray {
            origin,
            direction,
            source: (camera_index, u, v),
        };
        let Some(hit) = traverse(grid, &ray) else {
            return Ok(None);
        };
        let depth = hit.depth * axial;
        let Some(probs) = binning.discretize_normal(depth, noise_sigma) else {
            return Ok(None);
        };
        let mut feature = vec![0.0; classes];
        feature[hit.class as usize] = 1.0;
        let lift = PixelLift::new(feature.clone(), probs, (u as f64, v as f64), camera_index)?;
        let sigma = noise_sigma.max(MIN_GAUSSIAN_SIGMA);
        let gaussian = GaussianPrimitive::new(ray.at(hit.depth), [sigma; 3], 1.0, feature)?;
        Ok(Some((lift, gaussian, hit)))
    });
    let mut out = SynthLifts {
        lifts: Vec::new(),
        gaussians: Vec::new(),
        hits: Vec::new(),
    };
    for item in per_pixel {
        if let Some((l, gs, h)) = item? {
            out.lifts.push(l);
            out.gaussians.push(gs);
            out.hits.push(h);
        }
    }
    Ok(out)
}
