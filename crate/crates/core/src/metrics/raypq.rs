//! Panoptic quality over rays.
//!
//! A segment is the set of rays whose hit carries one `(class, instance)`
//! pair with a nonzero instance id. Keying by class as well as instance
//! makes ray membership class-gated.

use std::collections::BTreeMap;

use super::iou::mean_defined;
use super::rayiou::RayRecord;
use crate::grid::{ClassId, InstanceId, NO_INSTANCE};

pub const DEFAULT_MATCH_IOU: f64 = 0.5;

type Key = (ClassId, InstanceId);

#[derive(Debug, Clone, PartialEq)]
pub struct PqAt {
    pub threshold: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    /// Mean IoU of matched pairs; `None` without matches.
    pub sq: Option<f64>,
    /// `None` when there are no segments on either side.
    pub rq: Option<f64>,
    pub pq: Option<f64>,
    /// Matched `(pred, gt, iou)` triples in match order.
    pub matches: Vec<(Key, Key, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayPq {
    pub at: Vec<PqAt>,
    pub mean: Option<f64>,
}

fn key(h: &Option<super::traverse::Hit>) -> Option<Key> {
    h.filter(|h| h.instance != NO_INSTANCE).map(|h| (h.class, h.instance))
}

pub fn raypq_at(records: &[RayRecord], d: f64, match_iou: f64) -> PqAt {
    let mut pred_size: BTreeMap<Key, u64> = BTreeMap::new();
    let mut gt_size: BTreeMap<Key, u64> = BTreeMap::new();
    // (shared rays, valid rays) per (pred, gt) pair
    let mut pairs: BTreeMap<(Key, Key), (u64, u64)> = BTreeMap::new();
    for r in records {
        let (pk, gk) = (key(&r.pred), key(&r.gt));
        if let Some(p) = pk {
            *pred_size.entry(p).or_default() += 1;
        }
        if let Some(g) = gk {
            *gt_size.entry(g).or_default() += 1;
        }
        if let (Some(p), Some(g)) = (pk, gk) {
            let e = pairs.entry((p, g)).or_default();
            e.0 += 1;
            let (pd, gd) = (r.pred.expect("keyed").depth, r.gt.expect("keyed").depth);
            if p.0 == g.0 && (pd - gd).abs() <= d {
                e.1 += 1;
            }
        }
    }

    let mut candidates: Vec<(Key, Key, f64)> = pairs
        .iter()
        .filter(|((p, g), _)| p.0 == g.0)
        .map(|(&(p, g), &(shared, valid))| {
            let union = pred_size[&p] + gt_size[&g] - shared;
            (p, g, valid as f64 / union as f64)
        })
        .filter(|&(_, _, iou)| iou > match_iou)
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut used_pred = std::collections::BTreeSet::new();
    let mut used_gt = std::collections::BTreeSet::new();
    let mut matches = Vec::new();
    for (p, g, iou) in candidates {
        if used_pred.contains(&p) || used_gt.contains(&g) {
            continue;
        }
        used_pred.insert(p);
        used_gt.insert(g);
        matches.push((p, g, iou));
    }

    let tp = matches.len() as u64;
    let fp = pred_size.len() as u64 - tp;
    let fn_ = gt_size.len() as u64 - tp;
    let sq = (tp > 0).then(|| matches.iter().map(|m| m.2).sum::<f64>() / tp as f64);
    let denom = tp as f64 + 0.5 * fp as f64 + 0.5 * fn_ as f64;
    let rq = (denom > 0.0).then(|| tp as f64 / denom);
    let pq = rq.map(|rq| sq.unwrap_or(0.0) * rq);
    PqAt {
        threshold: d,
        tp,
        fp,
        fn_,
        sq,
        rq,
        pq,
        matches,
    }
}

pub fn raypq(records: &[RayRecord], thresholds: &[f64], match_iou: f64) -> RayPq {
    let at: Vec<PqAt> = thresholds.iter().map(|&d| raypq_at(records, d, match_iou)).collect();
    let mean = mean_defined(at.iter().map(|a| a.pq));
    RayPq { at, mean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::traverse::Hit;

    fn hit(class: ClassId, instance: InstanceId, depth: f64) -> Option<Hit> {
        Some(Hit {
            class,
            instance,
            depth,
            voxel: [0, 0, 0],
        })
    }

    fn two_instances() -> Vec<Option<Hit>> {
        let mut v = vec![hit(4, 1, 10.0); 6];
        v.extend(vec![hit(5, 2, 20.0); 4]);
        v.push(hit(11, 0, 3.0));
        v
    }

    #[test]
    fn identical_panoptic_labels() {
        let gt = two_instances();
        let records: Vec<RayRecord> = gt.iter().map(|&g| RayRecord { gt: g, pred: g }).collect();
        let r = raypq(&records, &[1.0, 2.0, 4.0], DEFAULT_MATCH_IOU);
        for a in &r.at {
            assert_eq!((a.sq, a.rq, a.pq), (Some(1.0), Some(1.0), Some(1.0)));
        }
        assert_eq!(r.mean, Some(1.0));
    }

    #[test]
    fn missing_instance_is_a_false_negative() {
        let gt = two_instances();
        let records: Vec<RayRecord> = gt
            .iter()
            .map(|&g| RayRecord {
                gt: g,
                pred: g.filter(|h| h.instance != 2),
            })
            .collect();
        let a = raypq_at(&records, 1.0, DEFAULT_MATCH_IOU);
        assert_eq!((a.tp, a.fp, a.fn_), (1, 0, 1));
        assert_eq!(a.sq, Some(1.0));
        assert!((a.rq.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((a.pq.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_predicted_instances() {
        let records: Vec<RayRecord> = two_instances().iter().map(|&g| RayRecord { gt: g, pred: None }).collect();
        assert_eq!(raypq_at(&records, 1.0, 0.5).pq, Some(0.0));
    }

    #[test]
    fn renaming_instances_is_invisible() {
        let gt = two_instances();
        let records: Vec<RayRecord> = gt
            .iter()
            .map(|&g| RayRecord {
                gt: g,
                pred: g.map(|h| Hit {
                    instance: if h.instance == 0 { 0 } else { 100 - h.instance },
                    ..h
                }),
            })
            .collect();
        assert_eq!(raypq(&records, &[1.0], 0.5).mean, Some(1.0));
    }

    #[test]
    fn depth_gate_lowers_iou() {
        let records: Vec<RayRecord> = (0..10)
            .map(|i| RayRecord {
                gt: hit(4, 1, 10.0),
                pred: hit(4, 7, if i < 3 { 13.0 } else { 10.0 }),
            })
            .collect();
        let a = raypq_at(&records, 1.0, 0.5);
        assert_eq!(a.matches.len(), 1);
        assert!((a.matches[0].2 - 0.7).abs() < 1e-15);
        let b = raypq_at(&records, 4.0, 0.5);
        assert_eq!(b.matches[0].2, 1.0);
    }
}
