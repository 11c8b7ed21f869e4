//! Decoding head outputs (class distributions, BEV centers and offsets) into
//! a panoptic voxel grid.

use crate::config::DEFAULT_THING_CLASSES;
use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::grid::{ClassId, InstanceId, VoxelGrid, NO_INSTANCE};
use crate::losses::ClassProbs;
use crate::par;

/// Raw head outputs over one voxel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PanopticPrediction {
    geometry: GridGeometry,
    sem_probs: ClassProbs,
    /// One value per BEV column, x-major.
    center_heatmap: Vec<f64>,
    /// `(dx, dy)` meters per BEV column.
    offsets: Vec<f64>,
    free_class: ClassId,
}

impl PanopticPrediction {
    pub fn new(
        geometry: GridGeometry,
        sem_probs: ClassProbs,
        center_heatmap: Vec<f64>,
        offsets: Vec<f64>,
        free_class: ClassId,
    ) -> Result<Self> {
        let columns = geometry.column_count();
        if sem_probs.cells() != geometry.voxel_count() {
            return Err(Error::shape(format!(
                "{} class distributions for {} voxels",
                sem_probs.cells(),
                geometry.voxel_count()
            )));
        }
        if center_heatmap.len() != columns || offsets.len() != 2 * columns {
            return Err(Error::shape(format!(
                "heatmap/offsets have {}/{} values for {columns} BEV cells",
                center_heatmap.len(),
                offsets.len()
            )));
        }
        if center_heatmap.iter().any(|h| !(0.0..=1.0).contains(h)) {
            return Err(Error::argument("center heatmap values must lie in [0, 1]"));
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::argument("offsets must be finite"));
        }
        if free_class as usize >= sem_probs.classes() || sem_probs.classes() > 256 {
            return Err(Error::argument(format!(
                "free class {free_class} invalid for {} classes",
                sem_probs.classes()
            )));
        }
        Ok(Self {
            geometry,
            sem_probs,
            center_heatmap,
            offsets,
            free_class,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn sem_probs(&self) -> &ClassProbs {
        &self.sem_probs
    }

    pub fn center_heatmap(&self) -> &[f64] {
        &self.center_heatmap
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanopticConfig {
    pub center_threshold: f64,
    pub top_k: usize,
    /// Suppression radius in BEV cells.
    pub nms_radius: f64,
    pub thing_classes: Vec<ClassId>,
}

impl Default for PanopticConfig {
    fn default() -> Self {
        Self {
            center_threshold: 0.3,
            top_k: 100,
            nms_radius: 2.0,
            thing_classes: DEFAULT_THING_CLASSES.to_vec(),
        }
    }
}

/// Argmax class per voxel, ties to the smaller id.
pub fn semantic_argmax(pred: &PanopticPrediction) -> Vec<ClassId> {
    let probs = &pred.sem_probs;
    par::map_range(probs.cells(), |i| {
        let row = probs.row(i);
        let mut best = 0;
        for (c, &p) in row.iter().enumerate().skip(1) {
            if p > row[best] {
                best = c;
            }
        }
        best as ClassId
    })
}

/// A kept instance center, in BEV cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Center {
    pub row: usize,
    pub col: usize,
    pub score: f64,
}

/// Local maxima above the threshold, ordered by (score desc, row, col),
/// greedily suppressed within `nms_radius` cells and truncated to `top_k`.
pub fn extract_centers(
    heatmap: &[f64],
    rows: usize,
    cols: usize,
    cfg: &PanopticConfig,
) -> Result<Vec<Center>> {
    if cfg.top_k == 0 {
        return Err(Error::argument("top_k must be at least 1"));
    }
    if heatmap.len() != rows * cols {
        return Err(Error::shape("heatmap does not match the BEV size"));
    }
    let at = |r: usize, c: usize| heatmap[r * cols + c];
    let mut candidates = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = at(r, c);
            if v <= cfg.center_threshold {
                continue;
            }
            let is_peak = (r.saturating_sub(1)..(r + 2).min(rows))
                .all(|rr| (c.saturating_sub(1)..(c + 2).min(cols)).all(|cc| at(rr, cc) <= v));
            if is_peak {
                candidates.push(Center {
                    row: r,
                    col: c,
                    score: v,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.row.cmp(&b.row))
            .then(a.col.cmp(&b.col))
    });
    let r2 = cfg.nms_radius * cfg.nms_radius;
    let mut kept: Vec<Center> = Vec::new();
    for cand in candidates {
        if kept.len() == cfg.top_k {
            break;
        }
        let suppressed = kept.iter().any(|k| {
            let dr = k.row as f64 - cand.row as f64;
            let dc = k.col as f64 - cand.col as f64;
            dr * dr + dc * dc <= r2
        });
        if !suppressed {
            kept.push(cand);
        }
    }
    Ok(kept)
}

/// Index of the center nearest to `(x, y)` meters; ties to the lower index.
pub fn nearest_center(geometry: &GridGeometry, centers: &[Center], x: f64, y: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in centers.iter().enumerate() {
        let (cx, cy) = geometry.cell_center(c.row, c.col);
        let d = (cx - x) * (cx - x) + (cy - y) * (cy - y);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Build a panoptic grid: argmax semantics, and thing voxels grouped by the
/// center nearest to their column's offset target. Instance ids are dense,
/// numbered in center order.
pub fn panoptic_fuse(pred: &PanopticPrediction, cfg: &PanopticConfig) -> Result<VoxelGrid> {
    let g = pred.geometry;
    let [dx, dy, dz] = g.dims();
    let centers = extract_centers(&pred.center_heatmap, dx, dy, cfg)?;
    let semantics = semantic_argmax(pred);
    let is_thing = |c: ClassId| c != pred.free_class && cfg.thing_classes.contains(&c);

    let column_center = par::map_range(dx * dy, |col| {
        let (x, y) = (col / dy, col % dy);
        let base = g.flat_index([x, y, 0]);
        if !semantics[base..base + dz].iter().any(|&c| is_thing(c)) {
            return None;
        }
        let (cx, cy) = g.cell_center(x, y);
        nearest_center(&g, &centers, cx + pred.offsets[2 * col], cy + pred.offsets[2 * col + 1])
    });

    let mut ids: Vec<InstanceId> = vec![NO_INSTANCE; centers.len()];
    let mut used: Vec<bool> = vec![false; centers.len()];
    for c in column_center.iter().flatten() {
        used[*c] = true;
    }
    let mut next: InstanceId = 0;
    for (id, u) in ids.iter_mut().zip(&used) {
        if *u {
            next += 1;
            *id = next;
        }
    }

    let instances = (0..g.voxel_count())
        .map(|f| {
            let col = f / dz;
            match column_center[col] {
                Some(c) if is_thing(semantics[f]) => ids[c],
                _ => NO_INSTANCE,
            }
        })
        .collect();
    VoxelGrid::from_parts(g, semantics, instances, pred.sem_probs.classes(), pred.free_class)
}

/// One-hot prediction that reproduces a label grid exactly, with unit
/// peaks at each instance's centroid cell and offsets pointing at it.
pub fn prediction_from_grid(grid: &VoxelGrid) -> Result<PanopticPrediction> {
    use crate::losses::{make_center_offset_targets, TargetConfig};
    let g = *grid.geometry();
    let probs = ClassProbs::one_hot(grid.class_count(), grid.semantics())?;
    let targets = make_center_offset_targets(grid, &TargetConfig::default())?;
    let mut heatmap = vec![0.0; g.column_count()];
    for &(_, x, y) in &targets.centroids {
        if let Some((r, c)) = g.world_to_cell(x, y) {
            heatmap[g.column_index(r, c)] = 1.0;
        }
    }
    PanopticPrediction::new(g, probs, heatmap, targets.offsets, grid.free_class())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DEFAULT_CLASS_COUNT, DEFAULT_FREE_CLASS as FREE};

    fn geom(n: usize) -> GridGeometry {
        GridGeometry::from_origin([0.0; 3], [0.4; 3], [n, n, 2]).unwrap()
    }

    fn all_class(g: GridGeometry, class: ClassId) -> ClassProbs {
        ClassProbs::one_hot(DEFAULT_CLASS_COUNT, &vec![class; g.voxel_count()]).unwrap()
    }

    #[test]
    fn argmax_examples() {
        let g = GridGeometry::from_origin([0.0; 3], [1.0; 3], [3, 1, 1]).unwrap();
        let mut data = vec![0.0; 3 * 3];
        data[2] = 1.0;
        data[3..6].copy_from_slice(&[1.0 / 3.0; 3]);
        data[6..9].copy_from_slice(&[0.2, 0.5, 0.3]);
        let probs = ClassProbs::new(3, data).unwrap();
        let pred = PanopticPrediction::new(g, probs, vec![0.0; 3], vec![0.0; 6], 2).unwrap();
        assert_eq!(semantic_argmax(&pred), vec![2, 0, 1]);
    }

    #[test]
    fn single_peak_claims_every_thing_voxel() {
        let g = geom(8);
        let mut heat = vec![0.0; 64];
        heat[g.column_index(3, 4)] = 1.0;
        let pred = PanopticPrediction::new(g, all_class(g, 4), heat, vec![0.0; 128], FREE).unwrap();
        let out = panoptic_fuse(&pred, &PanopticConfig::default()).unwrap();
        assert!(out.instances().iter().all(|&i| i == 1));
    }

    #[test]
    fn zero_heatmap_gives_no_instances() {
        let g = geom(6);
        let pred = PanopticPrediction::new(g, all_class(g, 4), vec![0.0; 36], vec![0.0; 72], FREE).unwrap();
        let out = panoptic_fuse(&pred, &PanopticConfig::default()).unwrap();
        assert!(out.instances().iter().all(|&i| i == NO_INSTANCE));
    }

    #[test]
    fn stuff_voxels_get_no_instance() {
        let g = geom(4);
        let mut heat = vec![0.0; 16];
        heat[5] = 0.9;
        let pred = PanopticPrediction::new(g, all_class(g, 11), heat, vec![0.0; 32], FREE).unwrap();
        let out = panoptic_fuse(&pred, &PanopticConfig::default()).unwrap();
        assert!(out.instances().iter().all(|&i| i == NO_INSTANCE));
    }

    #[test]
    fn top_k_zero_is_rejected() {
        let g = geom(2);
        let pred = PanopticPrediction::new(g, all_class(g, 4), vec![0.0; 4], vec![0.0; 8], FREE).unwrap();
        let cfg = PanopticConfig {
            top_k: 0,
            ..PanopticConfig::default()
        };
        assert!(matches!(panoptic_fuse(&pred, &cfg), Err(Error::Argument(_))));
    }

    #[test]
    fn nms_keeps_strongest_and_orders_deterministically() {
        let mut heat = vec![0.0; 10 * 10];
        heat[2 * 10 + 2] = 0.9;
        heat[2 * 10 + 4] = 0.8; // within radius 2 of the first
        heat[7 * 10 + 7] = 0.9;
        let centers = extract_centers(&heat, 10, 10, &PanopticConfig::default()).unwrap();
        let cells: Vec<(usize, usize)> = centers.iter().map(|c| (c.row, c.col)).collect();
        assert_eq!(cells, vec![(2, 2), (7, 7)]);
        let one = PanopticConfig {
            top_k: 1,
            ..PanopticConfig::default()
        };
        assert_eq!(extract_centers(&heat, 10, 10, &one).unwrap().len(), 1);
    }

    #[test]
    fn unused_centers_do_not_consume_ids() {
        let g = geom(8);
        let mut sem = vec![FREE; g.voxel_count()];
        sem[g.flat_index([6, 6, 0])] = 4;
        let probs = ClassProbs::one_hot(DEFAULT_CLASS_COUNT, &sem).unwrap();
        let mut heat = vec![0.0; 64];
        heat[g.column_index(0, 0)] = 1.0;
        heat[g.column_index(6, 6)] = 0.9;
        let pred = PanopticPrediction::new(g, probs, heat, vec![0.0; 128], FREE).unwrap();
        let out = panoptic_fuse(&pred, &PanopticConfig::default()).unwrap();
        assert_eq!(out.instance_ids(), vec![1]);
    }
}
