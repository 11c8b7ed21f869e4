//! Loss terms and their composition.
//!
//! Every differentiable loss returns its value together with the analytic
//! gradient with respect to its prediction input. All reductions are means
//! computed with [`par::sum`], whose fixed partitioned association makes
//! them independent of thread count. Logarithms clamp their argument to
//! `[EPS, 1 - EPS]` (or `[EPS, 1]` for class probabilities); entries that hit
//! the clamp receive zero gradient, matching the clamped function.

use crate::config::LossWeights;
use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::grid::{ClassId, InstanceId, VoxelGrid, NO_INSTANCE};
use crate::par;

pub const EPS: f64 = 1e-7;

const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// A scalar loss and its gradient with respect to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl LossGrad {
    fn zero(n: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; n],
        }
    }
}

/// Per-voxel occupancy probabilities (or binary targets).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyVolume {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl OccupancyVolume {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.voxel_count() {
            return Err(Error::shape(format!(
                "occupancy has {} values for {} voxels",
                values.len(),
                geometry.voxel_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::argument(format!(
                "occupancy value {} at voxel {i} outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self { geometry, values })
    }

    /// Binary occupancy of a label grid: 1 for every non-FREE voxel.
    pub fn from_grid(grid: &VoxelGrid) -> Self {
        let free = grid.free_class();
        Self {
            geometry: *grid.geometry(),
            values: grid
                .semantics()
                .iter()
                .map(|&c| if c == free { 0.0 } else { 1.0 })
                .collect(),
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Row-major `cells x classes` categorical distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbs {
    classes: usize,
    data: Vec<f64>,
}

impl ClassProbs {
    /// Every row must lie on the simplex within 1e-6.
    pub fn new(classes: usize, data: Vec<f64>) -> Result<Self> {
        if classes == 0 || !data.len().is_multiple_of(classes) {
            return Err(Error::shape(format!(
                "{} probabilities do not form rows of {classes} classes",
                data.len()
            )));
        }
        for (i, row) in data.chunks(classes).enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::argument(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::argument(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self { classes, data })
    }

    /// One-hot rows for the given labels.
    pub fn one_hot(classes: usize, labels: &[ClassId]) -> Result<Self> {
        let mut data = vec![0.0; labels.len() * classes];
        for (i, &c) in labels.iter().enumerate() {
            if c as usize >= classes {
                return Err(Error::argument(format!("label {c} >= class count {classes}")));
            }
            data[i * classes + c as usize] = 1.0;
        }
        Ok(Self { classes, data })
    }

    /// Uniform rows.
    pub fn uniform(classes: usize, cells: usize) -> Self {
        Self {
            classes,
            data: vec![1.0 / classes as f64; classes * cells],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn cells(&self) -> usize {
        self.data.len() / self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.classes..(i + 1) * self.classes]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Probability assigned to each cell's target class.
    pub fn gather(&self, labels: &[usize]) -> Result<Vec<f64>> {
        if labels.len() != self.cells() {
            return Err(Error::shape(format!(
                "{} labels for {} cells",
                labels.len(),
                self.cells()
            )));
        }
        labels
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if c >= self.classes {
                    Err(Error::argument(format!(
                        "label {c} at cell {i} >= class count {}",
                        self.classes
                    )))
                } else {
                    Ok(self.data[i * self.classes + c])
                }
            })
            .collect()
    }

    fn scatter(&self, labels: &[usize], per_cell: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.data.len()];
        for (i, (&c, &g)) in labels.iter().zip(per_cell).enumerate() {
            grad[i * self.classes + c] = g;
        }
        grad
    }
}

/// Masked per-cell vector fields (`dim` components per cell).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    dim: usize,
    predicted: Vec<f64>,
    target: Vec<f64>,
    mask: Vec<bool>,
}

impl FieldPair {
    pub fn new(dim: usize, predicted: Vec<f64>, target: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if dim == 0 || predicted.len() != mask.len() * dim || target.len() != predicted.len() {
            return Err(Error::shape(format!(
                "field pair: {} predicted, {} target values for {} cells of dim {dim}",
                predicted.len(),
                target.len(),
                mask.len()
            )));
        }
        Ok(Self {
            dim,
            predicted,
            target,
            mask,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn valid_cells(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Same target and mask with a new prediction.
    pub fn with_predicted(&self, predicted: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, predicted, self.target.clone(), self.mask.clone())
    }
}

/// Mean binary cross-entropy over paired slices.
pub fn binary_cross_entropy(pred: &[f64], gt: &[f64]) -> LossGrad {
    let n = pred.len();
    if n == 0 {
        return LossGrad::zero(0);
    }
    let inv_n = 1.0 / n as f64;
    let value = par::sum_by(n, |i| {
        let p = pred[i].clamp(EPS, 1.0 - EPS);
        let g = gt[i];
        -(g * p.ln() + (1.0 - g) * (1.0 - p).ln())
    }) * inv_n;
    let grad = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| {
            if !(EPS..=1.0 - EPS).contains(&p) {
                0.0
            } else {
                (p - g) / (p * (1.0 - p)) * inv_n
            }
        })
        .collect();
    LossGrad { value, grad }
}

/// Voxelwise occupancy BCE between a predicted and a binary target volume.
pub fn bce_occupancy(pred: &OccupancyVolume, gt: &OccupancyVolume) -> Result<LossGrad> {
    if !pred.geometry.approx_eq(&gt.geometry) {
        return Err(Error::shape("occupancy volumes have different geometry"));
    }
    Ok(binary_cross_entropy(&pred.values, &gt.values))
}

/// Focal loss as a function of the true-class probabilities `p_t`:
/// mean of `-alpha_t (1 - p_t)^gamma ln p_t`, gradient with respect to `p_t`.
pub fn focal_from_true_probs(p_t: &[f64], alpha_t: f64, gamma: f64) -> LossGrad {
    let n = p_t.len();
    if n == 0 {
        return LossGrad::zero(0);
    }
    let inv_n = 1.0 / n as f64;
    let value = par::sum_by(n, |i| {
        let p = p_t[i].clamp(EPS, 1.0);
        -alpha_t * (1.0 - p).powf(gamma) * p.ln()
    }) * inv_n;
    let grad = p_t
        .iter()
        .map(|&p| {
            if p < EPS {
                return 0.0;
            }
            let p = p.min(1.0);
            let q = 1.0 - p;
            // d/dp of -a q^g ln p = a (g q^(g-1) ln p - q^g / p)
            let focus = if gamma == 0.0 || q == 0.0 {
                0.0
            } else {
                gamma * q.powf(gamma - 1.0) * p.ln()
            };
            alpha_t * (focus - q.powf(gamma) / p) * inv_n
        })
        .collect();
    LossGrad { value, grad }
}

/// Cross-entropy as a function of the true-class probabilities: mean of
/// `-ln p_t`, gradient `-1 / p_t / N`.
pub fn cross_entropy_from_true_probs(p_t: &[f64]) -> LossGrad {
    let n = p_t.len();
    if n == 0 {
        return LossGrad::zero(0);
    }
    let inv_n = 1.0 / n as f64;
    let value = par::sum_by(n, |i| -p_t[i].clamp(EPS, 1.0).ln()) * inv_n;
    let grad = p_t
        .iter()
        .map(|&p| if p < EPS { 0.0 } else { -1.0 / p.min(1.0) * inv_n })
        .collect();
    LossGrad { value, grad }
}

/// Focal segmentation loss. The gradient has the shape of `pred` and is
/// nonzero only on each cell's true-class entry (`dL/dp_t`).
pub fn focal_seg(pred: &ClassProbs, gt: &[ClassId], weights: &LossWeights) -> Result<LossGrad> {
    let labels: Vec<usize> = gt.iter().map(|&c| c as usize).collect();
    let p_t = pred.gather(&labels)?;
    let lg = focal_from_true_probs(&p_t, weights.focal_alpha_t, weights.focal_gamma);
    Ok(LossGrad {
        value: lg.value,
        grad: pred.scatter(&labels, &lg.grad),
    })
}

/// Per-voxel semantic cross-entropy against a label grid. Gradient has the
/// shape of `pred`.
pub fn semantic_ce(pred: &ClassProbs, gt: &VoxelGrid) -> Result<LossGrad> {
    if pred.classes() != gt.class_count() || pred.cells() != gt.geometry().voxel_count() {
        return Err(Error::shape(format!(
            "prediction is {}x{}, grid is {}x{}",
            pred.cells(),
            pred.classes(),
            gt.geometry().voxel_count(),
            gt.class_count()
        )));
    }
    let labels: Vec<usize> = gt.semantics().iter().map(|&c| c as usize).collect();
    let p_t = pred.gather(&labels)?;
    let lg = cross_entropy_from_true_probs(&p_t);
    Ok(LossGrad {
        value: lg.value,
        grad: pred.scatter(&labels, &lg.grad),
    })
}

/// Masked mean over valid cells of the per-cell L1 norm `sum_k |p_k - t_k|`.
/// The subgradient is zero at exact ties. An empty mask yields zero.
pub fn l1_field(fp: &FieldPair) -> LossGrad {
    masked_mean(fp, |d| d.abs(), |d| {
        if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Masked mean over valid cells of the squared L2 norm `sum_k (p_k - t_k)^2`.
pub fn l2_field(fp: &FieldPair) -> LossGrad {
    masked_mean(fp, |d| d * d, |d| 2.0 * d)
}

fn masked_mean(fp: &FieldPair, f: impl Fn(f64) -> f64 + Sync + Send, df: impl Fn(f64) -> f64) -> LossGrad {
    let valid = fp.valid_cells();
    let n = fp.predicted.len();
    if valid == 0 {
        return LossGrad::zero(n);
    }
    let inv = 1.0 / valid as f64;
    let dim = fp.dim;
    let value = par::sum_by(n, |i| {
        if fp.mask[i / dim] {
            f(fp.predicted[i] - fp.target[i])
        } else {
            0.0
        }
    }) * inv;
    let grad = (0..n)
        .map(|i| {
            if fp.mask[i / dim] {
                df(fp.predicted[i] - fp.target[i]) * inv
            } else {
                0.0
            }
        })
        .collect();
    LossGrad { value, grad }
}

/// `lambda1 L_seg + lambda2 L_center + lambda3 L_offset`.
pub fn gaussian_branch_loss(seg: f64, center: f64, offset: f64, w: &LossWeights) -> f64 {
    w.lambda1 * seg + w.lambda2 * center + w.lambda3 * offset
}

/// `lambda_sem L_sem + lambda_center L_center + lambda_offset L_offset`.
pub fn occ_head_loss(sem: f64, center: f64, offset: f64, w: &LossWeights) -> f64 {
    w.lambda_sem * sem + w.lambda_center * center + w.lambda_offset * offset
}

/// `lambda_lss L_lss + lambda_g L_g + lambda_edge L_edge + L_occ`; the
/// occupancy head loss enters unweighted.
pub fn total_loss(l_lss: f64, l_g: f64, l_edge: f64, l_occ: f64, w: &LossWeights) -> Result<f64> {
    for (name, v) in [("L_lss", l_lss), ("L_g", l_g), ("L_edge", l_edge), ("L_occ", l_occ)] {
        if !v.is_finite() {
            return Err(Error::argument(format!("{name} is not finite: {v}")));
        }
    }
    Ok(w.lambda_lss * l_lss + w.lambda_g * l_g + w.lambda_edge * l_edge + l_occ)
}

/// Which BEV cells supervise the center heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenterMask {
    /// Only columns containing at least one instance voxel.
    #[default]
    ThingCells,
    AllCells,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetConfig {
    /// Heatmap Gaussian width in BEV cells.
    pub sigma_c: f64,
    pub center_mask: CenterMask,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            sigma_c: 1.5,
            center_mask: CenterMask::ThingCells,
        }
    }
}

/// BEV center-heatmap and offset targets derived from instance labels.
///
/// Both fields are x-major over the grid's BEV columns. Offsets are
/// `(dx, dy)` in meters from a cell center to its instance centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterOffsetTargets {
    pub heatmap: Vec<f64>,
    pub center_mask: Vec<bool>,
    pub offsets: Vec<f64>,
    pub offset_mask: Vec<bool>,
    /// `(instance id, centroid x, centroid y)` in ascending id order.
    pub centroids: Vec<(InstanceId, f64, f64)>,
}

impl CenterOffsetTargets {
    pub fn center_pair(&self, predicted: Vec<f64>) -> Result<FieldPair> {
        FieldPair::new(1, predicted, self.heatmap.clone(), self.center_mask.clone())
    }

    pub fn offset_pair(&self, predicted: Vec<f64>) -> Result<FieldPair> {
        FieldPair::new(2, predicted, self.offsets.clone(), self.offset_mask.clone())
    }
}

pub fn make_center_offset_targets(grid: &VoxelGrid, cfg: &TargetConfig) -> Result<CenterOffsetTargets> {
    if !(cfg.sigma_c.is_finite() && cfg.sigma_c > 0.0) {
        return Err(Error::config(format!("sigma_c must be positive, got {}", cfg.sigma_c)));
    }
    let g = grid.geometry();
    let [dx, dy, dz] = g.dims();
    let vs = g.voxel_size();
    let ids = grid.instance_ids();
    let slot = |id: InstanceId| ids.binary_search(&id).expect("known instance");

    // Centroids from voxel centers.
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); ids.len()];
    // Owning instance per column: most voxels, ties to the smaller id.
    let mut owner: Vec<Option<InstanceId>> = vec![None; dx * dy];
    let mut counts: Vec<(InstanceId, usize)> = Vec::new();
    for x in 0..dx {
        for y in 0..dy {
            counts.clear();
            for z in 0..dz {
                let id = grid.instance_at([x, y, z]);
                if id == NO_INSTANCE {
                    continue;
                }
                let (cx, cy) = g.cell_center(x, y);
                let s = &mut sums[slot(id)];
                s.0 += cx;
                s.1 += cy;
                s.2 += 1;
                match counts.iter_mut().find(|(i, _)| *i == id) {
                    Some(entry) => entry.1 += 1,
                    None => counts.push((id, 1)),
                }
            }
            owner[g.column_index(x, y)] = counts
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|&(id, _)| id);
        }
    }
    let centroids: Vec<(InstanceId, f64, f64)> = ids
        .iter()
        .zip(&sums)
        .map(|(&id, &(sx, sy, n))| (id, sx / n as f64, sy / n as f64))
        .collect();

    let two_s2 = 2.0 * cfg.sigma_c * cfg.sigma_c;
    let heatmap = par::map_range(dx * dy, |col| {
        let (cx, cy) = g.cell_center(col / dy, col % dy);
        centroids
            .iter()
            .map(|&(_, mx, my)| {
                let ux = (cx - mx) / vs[0];
                let uy = (cy - my) / vs[1];
                (-(ux * ux + uy * uy) / two_s2).exp()
            })
            .fold(0.0, f64::max)
    });

    let mut offsets = vec![0.0; dx * dy * 2];
    for (col, id) in owner.iter().enumerate() {
        if let Some(id) = id {
            let (cx, cy) = g.cell_center(col / dy, col % dy);
            let (_, mx, my) = centroids[slot(*id)];
            offsets[2 * col] = mx - cx;
            offsets[2 * col + 1] = my - cy;
        }
    }
    let offset_mask: Vec<bool> = owner.iter().map(Option::is_some).collect();
    let center_mask = match cfg.center_mask {
        CenterMask::ThingCells => offset_mask.clone(),
        CenterMask::AllCells => vec![true; dx * dy],
    };
    Ok(CenterOffsetTargets {
        heatmap,
        center_mask,
        offsets,
        offset_mask,
        centroids,
    })
}
