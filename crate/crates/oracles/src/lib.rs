//! Slow, obviously-correct reference implementations used by the test
//! suites of `occkit-core` and the CLI. Nothing here shares code paths with
//! the kernels it checks beyond the plain data types.

use std::collections::{BTreeMap, BTreeSet};

use occkit_core::edge::{EdgeKernel, KernelKind, LabelMap};
use occkit_core::geometry::{GridGeometry, Vec3, VoxelIndex};
use occkit_core::grid::{ClassId, InstanceId, VoxelGrid};
use occkit_core::metrics::Ray;

/// Step length of the marching ray oracle, meters (10 segments per 0.4 m
/// voxel). Every segment is tested exactly against all voxels its bounding
/// box touches, so the step changes the cost of the search, not its result.
pub const MARCH_STEP: f64 = 0.04;

/// Hit reported by the ray oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleHit {
    pub voxel: VoxelIndex,
    pub class: ClassId,
    pub instance: InstanceId,
    pub depth: f64,
}

fn lower_face(g: &GridGeometry, axis: usize, i: usize) -> f64 {
    g.min()[axis] + i as f64 * g.voxel_size()[axis]
}

/// Exact ray/box interval for voxel `v`: `(t_in, t_out)`, with `t_in` the
/// largest near-face parameter.
#[allow(clippy::needless_range_loop)]
fn voxel_interval(g: &GridGeometry, ray: &Ray, v: VoxelIndex) -> Option<(f64, f64)> {
    let mut t_in = f64::NEG_INFINITY;
    let mut t_out = f64::INFINITY;
    for k in 0..3 {
        let lo = lower_face(g, k, v[k]);
        let hi = lower_face(g, k, v[k] + 1);
        let (o, d) = (ray.origin[k], ray.direction[k]);
        if d == 0.0 {
            if o < lo || o >= hi {
                return None;
            }
            continue;
        }
        let (near, far) = if d > 0.0 { (lo, hi) } else { (hi, lo) };
        t_in = t_in.max((near - o) / d);
        t_out = t_out.min((far - o) / d);
    }
    (t_in < t_out).then_some((t_in, t_out))
}

#[allow(clippy::needless_range_loop)]
fn grid_span(g: &GridGeometry, ray: &Ray) -> Option<(f64, f64)> {
    let dims = g.dims();
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        let lo = lower_face(g, k, 0);
        let hi = lower_face(g, k, dims[k]);
        let (o, d) = (ray.origin[k], ray.direction[k]);
        if d == 0.0 {
            if o < lo || o >= hi {
                return None;
            }
            continue;
        }
        let (a, b) = ((lo - o) / d, (hi - o) / d);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    (t0 < t1).then_some((t0, t1))
}

fn cell_range(g: &GridGeometry, axis: usize, a: f64, b: f64) -> std::ops::RangeInclusive<usize> {
    let n = g.dims()[axis];
    let to_cell = |v: f64| {
        let c = ((v - g.min()[axis]) / g.voxel_size()[axis]).floor();
        c.clamp(0.0, (n - 1) as f64) as usize
    };
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    // widen by one cell so rounding in `to_cell` cannot hide a voxel
    to_cell(lo).saturating_sub(1)..=(to_cell(hi) + 1).min(n - 1)
}

/// March the ray in [`MARCH_STEP`] segments from where it enters the grid.
/// Within each segment every non-FREE voxel overlapping the segment's
/// bounding box is intersected exactly; the first segment with any
/// intersection yields the voxel with the smallest entry parameter. Depth
/// is that voxel's entry parameter, clamped at 0.
pub fn march_ray(grid: &VoxelGrid, ray: &Ray) -> Option<OracleHit> {
    march_ray_with_step(grid, ray, MARCH_STEP)
}

pub fn march_ray_with_step(grid: &VoxelGrid, ray: &Ray, step: f64) -> Option<OracleHit> {
    let g = grid.geometry();
    let (t_start, t_end) = grid_span(g, ray)?;
    let mut i = 0u64;
    loop {
        let ta = t_start + i as f64 * step;
        if ta >= t_end {
            return None;
        }
        let tb = (ta + step).min(t_end);
        let (pa, pb) = (ray.at(ta), ray.at(tb));
        let mut best: Option<(f64, VoxelIndex)> = None;
        for x in cell_range(g, 0, pa[0], pb[0]) {
            for y in cell_range(g, 1, pa[1], pb[1]) {
                for z in cell_range(g, 2, pa[2], pb[2]) {
                    let v = [x, y, z];
                    if !grid.is_occupied(v) {
                        continue;
                    }
                    let Some((t_in, t_out)) = voxel_interval(g, ray, v) else {
                        continue;
                    };
                    if t_out <= ta.max(0.0) || t_in > tb {
                        continue;
                    }
                    let t = t_in.max(0.0);
                    if best.is_none_or(|(bt, bv)| t < bt || (t == bt && v < bv)) {
                        best = Some((t, v));
                    }
                }
            }
        }
        if let Some((depth, voxel)) = best {
            return Some(OracleHit {
                voxel,
                class: grid.class_at(voxel),
                instance: grid.instance_at(voxel),
                depth,
            });
        }
        i += 1;
    }
}

/// Per-class `(tp, fp, fn)` at one threshold, counted directly.
pub fn rayiou_counts(
    gt: &[Option<OracleHit>],
    pred: &[Option<OracleHit>],
    classes: usize,
    d: f64,
) -> Vec<(u64, u64, u64)> {
    let mut counts = vec![(0, 0, 0); classes];
    for (g, p) in gt.iter().zip(pred) {
        match (g, p) {
            (Some(g), Some(p)) if g.class == p.class && (g.depth - p.depth).abs() <= d => {
                counts[g.class as usize].0 += 1;
            }
            _ => {
                if let Some(p) = p {
                    counts[p.class as usize].1 += 1;
                }
                if let Some(g) = g {
                    counts[g.class as usize].2 += 1;
                }
            }
        }
    }
    counts
}

/// RayPQ `(tp, fp, fn)` at one threshold by exhaustive pair scoring and
/// greedy unique matching on IoU > `match_iou`.
pub fn raypq_counts(gt: &[Option<OracleHit>], pred: &[Option<OracleHit>], d: f64, match_iou: f64) -> (u64, u64, u64) {
    type Key = (ClassId, InstanceId);
    let key = |h: &Option<OracleHit>| h.filter(|h| h.instance != 0).map(|h| (h.class, h.instance));
    let preds: BTreeSet<Key> = pred.iter().filter_map(key).collect();
    let gts: BTreeSet<Key> = gt.iter().filter_map(key).collect();
    let mut scored = Vec::new();
    for p in &preds {
        for g in &gts {
            if p.0 != g.0 {
                continue;
            }
            let (mut in_p, mut in_g, mut both, mut valid) = (0u64, 0u64, 0u64, 0u64);
            for (gh, ph) in gt.iter().zip(pred) {
                let ip = key(ph) == Some(*p);
                let ig = key(gh) == Some(*g);
                in_p += ip as u64;
                in_g += ig as u64;
                if ip && ig {
                    both += 1;
                    if (gh.unwrap().depth - ph.unwrap().depth).abs() <= d {
                        valid += 1;
                    }
                }
            }
            let iou = valid as f64 / (in_p + in_g - both) as f64;
            if iou > match_iou {
                scored.push((iou, *p, *g));
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = BTreeSet::new();
    let mut used_g = BTreeSet::new();
    for (_, p, g) in scored {
        if !used_p.contains(&p) && !used_g.contains(&g) {
            used_p.insert(p);
            used_g.insert(g);
        }
    }
    let tp = used_p.len() as u64;
    (tp, preds.len() as u64 - tp, gts.len() as u64 - tp)
}

/// Taps written out by hand for the 3x3 kernels; larger sizes come from
/// explicit 2D convolution of the 3x3 taps with a smoothing mask.
pub fn reference_taps(kind: KernelKind, size: usize) -> (Vec<f64>, Vec<f64>) {
    let base_x: Vec<f64> = match kind {
        KernelKind::Sobel => vec![-1., 0., 1., -2., 0., 2., -1., 0., 1.],
        KernelKind::Prewitt => vec![-1., 0., 1., -1., 0., 1., -1., 0., 1.],
        KernelKind::Laplacian => vec![0., 1., 0., 1., -4., 1., 0., 1., 0.],
    };
    let t = |m: &[f64], n: usize| -> Vec<f64> { (0..n * n).map(|i| m[(i % n) * n + i / n]).collect() };
    let mut x = base_x;
    let mut n = 3;
    while n < size {
        let smooth: Vec<f64> = match kind {
            KernelKind::Prewitt => vec![1.; 9],
            _ => vec![1., 2., 1., 2., 4., 2., 1., 2., 1.],
        };
        x = conv2_full(&x, n, &smooth, 3);
        n += 2;
    }
    let y = if kind == KernelKind::Laplacian { Vec::new() } else { t(&x, n) };
    (x, y)
}

fn conv2_full(a: &[f64], na: usize, b: &[f64], nb: usize) -> Vec<f64> {
    let n = na + nb - 1;
    let mut out = vec![0.0; n * n];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[(i + k) * n + (j + l)] += a[i * na + j] * b[k * nb + l];
                }
            }
        }
    }
    out
}

/// Dense cross-correlation over an explicitly replicate-padded copy of the
/// label map; returns the gradient magnitude per cell.
pub fn dense_magnitude(labels: &LabelMap, kernel: &EdgeKernel) -> Vec<f64> {
    let n = kernel.size();
    let h = n / 2;
    let (rows, cols) = (labels.rows(), labels.cols());
    let (pr, pc) = (rows + 2 * h, cols + 2 * h);
    let mut padded = vec![0.0; pr * pc];
    for r in 0..pr {
        for c in 0..pc {
            let sr = r.saturating_sub(h).min(rows - 1);
            let sc = c.saturating_sub(h).min(cols - 1);
            padded[r * pc + c] = labels.get(sr, sc) as f64;
        }
    }
    let apply = |taps: &[f64], r: usize, c: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += taps[i * n + j] * padded[(r + i) * pc + (c + j)];
            }
        }
        s
    };
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let gx = apply(kernel.taps_x(), r, c);
            let m = if kernel.kind() == KernelKind::Laplacian {
                gx.abs()
            } else {
                let gy = apply(kernel.taps_y(), r, c);
                (gx * gx + gy * gy).sqrt()
            };
            out.push(m);
        }
    }
    out
}

/// Index of the nearest point by exhaustive search; ties to the lower index.
pub fn nearest_index(points: &[(f64, f64)], q: (f64, f64)) -> Option<usize> {
    let d = |p: &(f64, f64)| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2);
    let mut best = None;
    for (i, p) in points.iter().enumerate() {
        match best {
            Some((_, bd)) if d(p) >= bd => {}
            _ => best = Some((i, d(p))),
        }
    }
    best.map(|(i, _)| i)
}

/// Integral over the plane of `opacity * exp(-x^2/2sx^2 - y^2/2sy^2)`.
pub fn gaussian_plane_integral(sigma_x: f64, sigma_y: f64, opacity: f64) -> f64 {
    opacity * 2.0 * std::f64::consts::PI * sigma_x * sigma_y
}

/// Fraction of a 1D normal's mass inside `[mean - k sigma, mean + k sigma]`.
pub fn normal_mass_within(k: f64) -> f64 {
    libm::erf(k / std::f64::consts::SQRT_2)
}

/// Instance footprint: BEV columns covered by each instance id.
pub fn instance_columns(grid: &VoxelGrid) -> BTreeMap<InstanceId, BTreeSet<(usize, usize)>> {
    let g = grid.geometry();
    let mut out: BTreeMap<InstanceId, BTreeSet<(usize, usize)>> = BTreeMap::new();
    for (f, &id) in grid.instances().iter().enumerate() {
        if id != 0 {
            let v = g.unflatten(f);
            out.entry(id).or_default().insert((v[0], v[1]));
        }
    }
    out
}

/// Point on the ray at parameter `t`, computed without the core helpers.
pub fn ray_point(ray: &Ray, t: f64) -> Vec3 {
    [
        ray.origin[0] + t * ray.direction[0],
        ray.origin[1] + t * ray.direction[1],
        ray.origin[2] + t * ray.direction[2],
    ]
}
