use super::iou::mean_defined;
use super::traverse::Hit;
use crate::error::{Error, Result};

/// Ground-truth and predicted hits of one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayRecord {
    pub gt: Option<Hit>,
    pub pred: Option<Hit>,
}

/// Pair per-ray hits from the same ray set.
pub fn pair_records(gt: &[Option<Hit>], pred: &[Option<Hit>]) -> Result<Vec<RayRecord>> {
    if gt.len() != pred.len() {
        return Err(Error::shape(format!(
            "{} ground-truth and {} predicted ray results",
            gt.len(),
            pred.len()
        )));
    }
    Ok(gt
        .iter()
        .zip(pred)
        .map(|(&gt, &pred)| RayRecord { gt, pred })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_
    }

    pub fn iou(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.tp as f64 / self.total() as f64)
    }
}

/// Whether a record counts as a true positive at threshold `d`.
pub fn is_true_positive(r: &RayRecord, d: f64) -> bool {
    match (r.gt, r.pred) {
        (Some(g), Some(p)) => g.class == p.class && (p.depth - g.depth).abs() <= d,
        _ => false,
    }
}

/// Per-class counts at one threshold. A ray that is not a true positive
/// charges FP to its predicted class and FN to its ground-truth class.
pub fn class_tallies(records: &[RayRecord], classes: usize, d: f64) -> Vec<Tally> {
    let mut t = vec![Tally::default(); classes];
    for r in records {
        if is_true_positive(r, d) {
            t[r.gt.expect("tp has gt").class as usize].tp += 1;
            continue;
        }
        if let Some(p) = r.pred {
            t[p.class as usize].fp += 1;
        }
        if let Some(g) = r.gt {
            t[g.class as usize].fn_ += 1;
        }
    }
    t
}

/// RayIoU at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RayIouAt {
    pub threshold: f64,
    pub tallies: Vec<Tally>,
    /// `None` for FREE and classes with no evidence.
    pub per_class: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayIou {
    pub at: Vec<RayIouAt>,
    /// Mean of the defined per-threshold values.
    pub mean: Option<f64>,
}

pub fn rayiou(records: &[RayRecord], classes: usize, free_class: usize, thresholds: &[f64]) -> RayIou {
    let at: Vec<RayIouAt> = thresholds
        .iter()
        .map(|&d| {
            let tallies = class_tallies(records, classes, d);
            let per_class: Vec<Option<f64>> = tallies
                .iter()
                .enumerate()
                .map(|(c, t)| if c == free_class { None } else { t.iou() })
                .collect();
            let mean = mean_defined(per_class.iter().copied());
            RayIouAt {
                threshold: d,
                tallies,
                per_class,
                mean,
            }
        })
        .collect();
    let mean = mean_defined(at.iter().map(|a| a.mean));
    RayIou { at, mean }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hit(class: u8, depth: f64) -> Option<Hit> {
        Some(Hit {
            class,
            instance: 0,
            depth,
            voxel: [0, 0, 0],
        })
    }

    #[test]
    fn counting_rules() {
        let records = vec![
            RayRecord { gt: hit(1, 10.0), pred: hit(1, 10.5) },
            RayRecord { gt: hit(1, 10.0), pred: hit(2, 10.0) },
            RayRecord { gt: hit(2, 5.0), pred: None },
            RayRecord { gt: None, pred: hit(1, 3.0) },
            RayRecord { gt: None, pred: None },
        ];
        let t = class_tallies(&records, 3, 1.0);
        assert_eq!(t[1], Tally { tp: 1, fp: 1, fn_: 1 });
        assert_eq!(t[2], Tally { tp: 0, fp: 1, fn_: 1 });
        let strict = class_tallies(&records, 3, 0.25);
        assert_eq!(strict[1], Tally { tp: 0, fp: 2, fn_: 2 });
    }

    #[test]
    fn identical_records_score_one() {
        let records: Vec<RayRecord> = (0..10)
            .map(|i| RayRecord { gt: hit(i % 3, i as f64), pred: hit(i % 3, i as f64) })
            .collect();
        let r = rayiou(&records, 4, 3, &[1.0, 2.0, 4.0]);
        assert_eq!(r.mean, Some(1.0));
    }

    #[test]
    fn displaced_surface_threshold_structure() {
        let records: Vec<RayRecord> = (0..5)
            .map(|_| RayRecord { gt: hit(0, 10.0), pred: hit(0, 13.0) })
            .collect();
        let r = rayiou(&records, 2, 1, &[1.0, 2.0, 4.0]);
        let means: Vec<Option<f64>> = r.at.iter().map(|a| a.mean).collect();
        assert_eq!(means, vec![Some(0.0), Some(0.0), Some(1.0)]);
        assert_eq!(r.mean, Some(1.0 / 3.0));
    }

    #[test]
    fn empty_records_are_undefined() {
        let r = rayiou(&[], 3, 2, &[1.0]);
        assert_eq!(r.mean, None);
        assert!(r.at[0].tallies.iter().all(|t| t.total() == 0));
    }
}
