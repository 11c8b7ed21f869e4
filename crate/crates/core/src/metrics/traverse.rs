//! Amanatides-Woo voxel traversal.
//!
//! Voxel faces are always computed as `min + i * voxel_size` (never
//! accumulated), so the depth reported for a hit is exactly the ray
//! parameter of that voxel's entry face as evaluated by this formula.

use super::rays::Ray;
use crate::geometry::{GridGeometry, VoxelIndex};
use crate::grid::{ClassId, InstanceId, VoxelGrid};
use crate::par;

/// First non-FREE voxel along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub class: ClassId,
    pub instance: InstanceId,
    /// Distance from the ray origin to the voxel's entry face, clamped at 0
    /// when the origin lies inside the voxel.
    pub depth: f64,
    pub voxel: VoxelIndex,
}

#[inline]
fn face(g: &GridGeometry, axis: usize, i: usize) -> f64 {
    g.min()[axis] + i as f64 * g.voxel_size()[axis]
}

/// Parameter interval `[t0, t1)` over which the ray is inside the grid box,
/// restricted to `t >= 0`.
#[allow(clippy::needless_range_loop)]
pub fn grid_interval(g: &GridGeometry, ray: &Ray) -> Option<(f64, f64)> {
    let dims = g.dims();
    let mut t0: f64 = 0.0;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        let lo = face(g, k, 0);
        let hi = face(g, k, dims[k]);
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

/// Walk the voxels pierced by `ray` in order, calling `visit(voxel, t_entry)`
/// until it returns `true`.
///
/// Only voxels the ray spends a positive parameter length in are visited.
/// When boundary crossings on several axes coincide exactly (the ray passes
/// through an edge or corner), all of those axes step together and the
/// voxels grazed at that single point are skipped.
pub fn walk(g: &GridGeometry, ray: &Ray, mut visit: impl FnMut(VoxelIndex, f64) -> bool) {
    let Some((t_enter, t_exit)) = grid_interval(g, ray) else {
        return;
    };
    let dims = g.dims();
    let vs = g.voxel_size();
    let p = ray.at(t_enter);
    let mut idx = [0usize; 3];
    let mut step = [0isize; 3];
    let mut t_next = [f64::INFINITY; 3];
    for k in 0..3 {
        let rel = ((p[k] - g.min()[k]) / vs[k]).floor();
        let mut i = (rel.max(0.0) as usize).min(dims[k] - 1);
        let (o, d) = (ray.origin[k], ray.direction[k]);
        // settle on the cell whose exit face lies strictly after t_enter and
        // whose entry face does not, using the same face arithmetic as the walk
        if d > 0.0 {
            step[k] = 1;
            while i + 1 < dims[k] && (face(g, k, i + 1) - o) / d <= t_enter {
                i += 1;
            }
            while i > 0 && (face(g, k, i) - o) / d > t_enter {
                i -= 1;
            }
            t_next[k] = (face(g, k, i + 1) - o) / d;
        } else if d < 0.0 {
            step[k] = -1;
            while i > 0 && (face(g, k, i) - o) / d <= t_enter {
                i -= 1;
            }
            while i + 1 < dims[k] && (face(g, k, i + 1) - o) / d > t_enter {
                i += 1;
            }
            t_next[k] = (face(g, k, i) - o) / d;
        } else {
            while i + 1 < dims[k] && face(g, k, i + 1) <= o {
                i += 1;
            }
            while i > 0 && face(g, k, i) > o {
                i -= 1;
            }
        }
        idx[k] = i;
    }
    let mut t = t_enter;
    loop {
        if visit(idx, t) {
            return;
        }
        t = t_next[0].min(t_next[1]).min(t_next[2]);
        if t >= t_exit {
            return;
        }
        for axis in 0..3 {
            if t_next[axis] != t {
                continue;
            }
            if step[axis] > 0 {
                idx[axis] += 1;
                if idx[axis] >= dims[axis] {
                    return;
                }
                t_next[axis] = (face(g, axis, idx[axis] + 1) - ray.origin[axis]) / ray.direction[axis];
            } else {
                if idx[axis] == 0 {
                    return;
                }
                idx[axis] -= 1;
                t_next[axis] = (face(g, axis, idx[axis]) - ray.origin[axis]) / ray.direction[axis];
            }
        }
    }
}

/// First voxel along `ray` whose class is not FREE.
pub fn traverse(grid: &VoxelGrid, ray: &Ray) -> Option<Hit> {
    let mut hit = None;
    walk(grid.geometry(), ray, |voxel, t| {
        if grid.is_occupied(voxel) {
            hit = Some(Hit {
                class: grid.class_at(voxel),
                instance: grid.instance_at(voxel),
                depth: t,
                voxel,
            });
            true
        } else {
            false
        }
    });
    hit
}

/// [`traverse`] for every ray, in ray order.
pub fn cast_rays(grid: &VoxelGrid, rays: &[Ray]) -> Vec<Option<Hit>> {
    par::map(rays, |r| traverse(grid, r))
}
