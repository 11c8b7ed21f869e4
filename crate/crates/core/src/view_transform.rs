//! Lifting image features into BEV: the discretized depth-bin path, the
//! continuous Gaussian path, hybrid blending and multi-view fusion.

use crate::bev::BevGrid;
use crate::camera::CameraModel;
use crate::config::{LossWeights, DEFAULT_BLEND_ALPHA};
use crate::error::{Error, Result};
use crate::geometry::{GridGeometry, Vec3};
use crate::lift::{DepthBinning, GaussianPrimitive, PixelLift};
use crate::par;

/// A batch of frustum points sharing one channel count, stored as flat arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrustumPoints {
    channels: usize,
    positions: Vec<Vec3>,
    features: Vec<f64>,
}

/// Borrowed view of one frustum point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrustumPoint<'a> {
    pub position: Vec3,
    pub feature: &'a [f64],
}

impl FrustumPoints {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            ..Self::default()
        }
    }

    pub fn from_parts(channels: usize, positions: Vec<Vec3>, features: Vec<f64>) -> Result<Self> {
        if features.len() != positions.len() * channels {
            return Err(Error::shape(format!(
                "{} positions need {} feature values, got {}",
                positions.len(),
                positions.len() * channels,
                features.len()
            )));
        }
        if positions.iter().flatten().chain(&features).any(|v| !v.is_finite()) {
            return Err(Error::argument("frustum points must be finite"));
        }
        Ok(Self {
            channels,
            positions,
            features,
        })
    }

    pub fn push(&mut self, position: Vec3, feature: impl IntoIterator<Item = f64>) {
        self.positions.push(position);
        self.features.extend(feature);
        debug_assert_eq!(self.features.len(), self.positions.len() * self.channels);
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn get(&self, i: usize) -> FrustumPoint<'_> {
        FrustumPoint {
            position: self.positions[i],
            feature: &self.features[i * self.channels..(i + 1) * self.channels],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = FrustumPoint<'_>> {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }
}

/// Blend coefficient for `B^h = alpha * B^g + B^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendConfig {
    alpha: f64,
}

impl BlendConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config(format!("blend alpha {alpha} outside [0, 1]")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_BLEND_ALPHA,
        }
    }
}

pub fn make_depth_bins(binning: &DepthBinning) -> Vec<f64> {
    (0..binning.bins()).map(|i| binning.value(i)).collect()
}

/// Unproject every pixel at every bin depth, weighting its feature by the
/// bin probability. Output is pixel-major: `|lifts| * B` points.
pub fn lift_frustum(
    lifts: &[PixelLift],
    cam: &CameraModel,
    binning: &DepthBinning,
) -> Result<FrustumPoints> {
    let depths = make_depth_bins(binning);
    let channels = lifts.first().map_or(0, |l| l.feature.len());
    for (i, l) in lifts.iter().enumerate() {
        if l.depth_probs().len() != depths.len() {
            return Err(Error::shape(format!(
                "lift {i} has {} depth probabilities for {} bins",
                l.depth_probs().len(),
                depths.len()
            )));
        }
        if l.feature.len() != channels {
            return Err(Error::shape(format!(
                "lift {i} has {} feature channels, expected {channels}",
                l.feature.len()
            )));
        }
        let (u, v) = l.pixel;
        if !cam.contains_pixel(u, v) {
            return Err(Error::argument(format!(
                "lift {i} pixel ({u}, {v}) outside the {:?} image",
                cam.image_size()
            )));
        }
    }

    let per_pixel = par::map(lifts, |l| {
        let (u, v) = l.pixel;
        let positions: Vec<Vec3> = depths.iter().map(|&d| cam.unproject(u, v, d)).collect();
        let features: Vec<f64> = l
            .depth_probs()
            .iter()
            .flat_map(|&p| l.feature.iter().map(move |&c| p * c))
            .collect();
        (positions, features)
    });

    let mut out = FrustumPoints {
        channels,
        positions: Vec::with_capacity(lifts.len() * depths.len()),
        features: Vec::with_capacity(lifts.len() * depths.len() * channels),
    };
    for (positions, features) in per_pixel {
        out.positions.extend(positions);
        out.features.extend(features);
    }
    Ok(out)
}

/// Sum-pool frustum features into the BEV cell under each point (`B^d`).
///
/// Points outside the x/y range are dropped. Cell lookup runs in parallel;
/// accumulation runs in input order, so the result is independent of the
/// worker count.
pub fn splat_lss_to_bev(
    points: &FrustumPoints,
    geometry: &GridGeometry,
    channels: usize,
) -> Result<BevGrid> {
    let mut grid = BevGrid::zeros(*geometry, channels);
    splat_lss_into(&mut grid, points)?;
    Ok(grid)
}

/// Accumulate `points` into an existing grid. Splatting a point list in
/// consecutive chunks gives the same bits as splatting it whole.
pub fn splat_lss_into(grid: &mut BevGrid, points: &FrustumPoints) -> Result<()> {
    let channels = grid.channels();
    if points.channels() != channels && !points.is_empty() {
        return Err(Error::shape(format!(
            "points carry {} channels, BEV grid has {channels}",
            points.channels()
        )));
    }
    let geometry = *grid.geometry();
    let cells = par::map(points.positions(), |p| geometry.world_to_cell(p[0], p[1]));
    for (i, cell) in cells.into_iter().enumerate() {
        let Some((x, y)) = cell else { continue };
        let o = grid.offset(x, y);
        let dst = &mut grid.data_mut()[o..o + channels];
        for (d, s) in dst.iter_mut().zip(points.get(i).feature) {
            *d += s;
        }
    }
    Ok(())
}

pub fn eval_gaussian(gp: &GaussianPrimitive, x: Vec3) -> f64 {
    gp.eval(x)
}

/// Render Gaussians into BEV: `F(cell) = sum_i w_i G_i(cell center)` over
/// cells whose center lies within `tolerance_k * sigma` of the mean on both
/// horizontal axes (`B^g`).
///
/// Contributions are reduced per (cell, channel) in ascending value order,
/// which makes the output bit-identical under any permutation of the input
/// list and any worker count.
pub fn splat_gaussians_to_bev(
    gaussians: &[GaussianPrimitive],
    geometry: &GridGeometry,
    channels: usize,
    weights: &LossWeights,
) -> Result<BevGrid> {
    weights.validate()?;
    if let Some(i) = gaussians.iter().position(|g| g.weight().len() != channels) {
        return Err(Error::shape(format!(
            "Gaussian {i} has {} weight channels, BEV grid has {channels}",
            gaussians[i].weight().len()
        )));
    }
    let k = weights.tolerance_k;
    let contributions: Vec<Vec<(usize, f64)>> = par::map(gaussians, |gp| {
        let mut out = Vec::new();
        let xs = footprint(geometry, 0, gp.mean()[0], k * gp.sigma()[0]);
        let ys = footprint(geometry, 1, gp.mean()[1], k * gp.sigma()[1]);
        for &(x, cx) in &xs {
            for &(y, cy) in &ys {
                let g = gp.eval_bev(cx, cy);
                let base = geometry.column_index(x, y) * channels;
                for (c, &w) in gp.weight().iter().enumerate() {
                    let v = w * g;
                    if v != 0.0 {
                        out.push((base + c, v));
                    }
                }
            }
        }
        out
    });
    let mut flat: Vec<(usize, f64)> = contributions.into_iter().flatten().collect();
    par::sort_by(&mut flat, |a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut grid = BevGrid::zeros(*geometry, channels);
    let data = grid.data_mut();
    for (slot, v) in flat {
        data[slot] += v;
    }
    Ok(grid)
}

/// Cells along `axis` whose centers lie within `radius` of `mean`, paired
/// with those centers.
fn footprint(geometry: &GridGeometry, axis: usize, mean: f64, radius: f64) -> Vec<(usize, f64)> {
    let lo = geometry.min()[axis];
    let vs = geometry.voxel_size()[axis];
    let n = geometry.dims()[axis] as i64;
    let first = (((mean - radius - lo) / vs - 0.5).floor() as i64).max(0);
    let last = (((mean + radius - lo) / vs - 0.5).ceil() as i64).min(n - 1);
    (first..=last)
        .filter_map(|i| {
            let c = lo + (i as f64 + 0.5) * vs;
            ((c - mean).abs() <= radius).then_some((i as usize, c))
        })
        .collect()
}

/// `B^h = alpha * B^g + B^d`, elementwise. Not a convex combination: the
/// LSS grid always enters with weight one.
pub fn blend_hybrid(bev_g: &BevGrid, bev_d: &BevGrid, cfg: &BlendConfig) -> Result<BevGrid> {
    bev_g.check_same_shape(bev_d)?;
    let alpha = cfg.alpha();
    let data = bev_g
        .data()
        .iter()
        .zip(bev_d.data())
        .map(|(g, d)| alpha * g + d)
        .collect();
    BevGrid::from_data(*bev_d.geometry(), bev_d.channels(), data)
}

/// Elementwise sum of per-view grids in list order (`B_agg`).
pub fn fuse_views(grids: &[BevGrid]) -> Result<BevGrid> {
    let (first, rest) = grids
        .split_first()
        .ok_or_else(|| Error::argument("cannot fuse an empty list of views"))?;
    let mut acc = first.clone();
    for g in rest {
        acc.check_same_shape(g)?;
        for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
            *a += b;
        }
    }
    Ok(acc)
}
