use crate::error::{Error, Result};
use crate::grid::VoxelGrid;

/// Per-class voxel IoU and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassIou {
    /// `None` for FREE and for classes absent from both volumes.
    pub per_class: Vec<Option<f64>>,
    /// Mean over the defined entries of `per_class`.
    pub miou: Option<f64>,
}

pub(crate) fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Voxel IoU per class over the voxels selected by `mask` (all when `None`).
pub fn per_class_iou(pred: &VoxelGrid, gt: &VoxelGrid, mask: Option<&[bool]>) -> Result<ClassIou> {
    gt.check_compatible(pred)?;
    let n = gt.geometry().voxel_count();
    if mask.is_some_and(|m| m.len() != n) {
        return Err(Error::shape(format!("mask length does not match {n} voxels")));
    }
    let classes = gt.class_count();
    let mut inter = vec![0u64; classes];
    let mut in_pred = vec![0u64; classes];
    let mut in_gt = vec![0u64; classes];
    for i in 0..n {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        let (p, g) = (pred.semantics()[i] as usize, gt.semantics()[i] as usize);
        in_pred[p] += 1;
        in_gt[g] += 1;
        if p == g {
            inter[p] += 1;
        }
    }
    let free = gt.free_class() as usize;
    let per_class: Vec<Option<f64>> = (0..classes)
        .map(|c| {
            let union = in_pred[c] + in_gt[c] - inter[c];
            (c != free && union > 0).then(|| inter[c] as f64 / union as f64)
        })
        .collect();
    let miou = mean_defined(per_class.iter().copied());
    Ok(ClassIou { per_class, miou })
}
