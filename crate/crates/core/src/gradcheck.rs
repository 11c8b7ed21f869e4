//! Central finite-difference verification of the analytic loss gradients.
//!
//! Each loss is evaluated at [`POINTS`] random inputs of [`CELLS`] values.
//! For every coordinate the analytic derivative `a` is compared with
//! `n = (f(x + h) - f(x - h)) / 2h` through `|a - n| / max(|a|, |n|)`
//! (zero when both vanish). Inputs are drawn from a seeded SplitMix64 so the
//! suite is reproducible.

use crate::config::LossWeights;
use crate::edge::{edge_bce_loss, EdgeMap};
use crate::geometry::GridGeometry;
use crate::losses::{
    bce_occupancy, cross_entropy_from_true_probs, focal_from_true_probs, l1_field, l2_field,
    FieldPair, LossGrad, OccupancyVolume,
};
use crate::rng::SplitMix64;

pub const FD_STEP: f64 = 1e-6;
pub const REL_TOL: f64 = 1e-5;
pub const POINTS: usize = 100;
pub const CELLS: usize = 8;
pub const DEFAULT_SEED: u64 = 0x6772_6164;

/// Outcome of checking one loss.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub name: &'static str,
    pub points: usize,
    pub max_rel_err: f64,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= REL_TOL
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Largest relative error over all coordinates of `x`.
pub fn check_point(f: impl Fn(&[f64]) -> LossGrad, x: &[f64]) -> f64 {
    let analytic = f(x).grad;
    let mut probe = x.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let up = f(&probe).value;
        probe[i] = x[i] - FD_STEP;
        let down = f(&probe).value;
        probe[i] = x[i];
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

fn probs(rng: &mut SplitMix64) -> Vec<f64> {
    (0..CELLS).map(|_| rng.uniform(0.05, 0.95)).collect()
}

fn binary(rng: &mut SplitMix64) -> Vec<f64> {
    (0..CELLS).map(|_| rng.below(2) as f64).collect()
}

/// Prediction/target pairs at least 0.01 apart, keeping L1 off its kinks.
fn separated(rng: &mut SplitMix64) -> (Vec<f64>, Vec<f64>) {
    let mut pred = Vec::with_capacity(CELLS);
    let mut target = Vec::with_capacity(CELLS);
    while pred.len() < CELLS {
        let p = rng.uniform(-2.0, 2.0);
        let t = rng.uniform(-2.0, 2.0);
        if (p - t).abs() >= 0.01 {
            pred.push(p);
            target.push(t);
        }
    }
    (pred, target)
}

fn field_mask(rng: &mut SplitMix64, cells: usize) -> Vec<bool> {
    let mut mask: Vec<bool> = (0..cells).map(|_| rng.below(4) != 0).collect();
    mask[0] = true;
    mask
}

fn run(name: &'static str, seed: u64, mut point: impl FnMut(&mut SplitMix64) -> f64) -> GradReport {
    let mut rng = SplitMix64::new(seed);
    let max_rel_err = (0..POINTS).map(|_| point(&mut rng)).fold(0.0, f64::max);
    GradReport {
        name,
        points: POINTS,
        max_rel_err,
    }
}

/// Check every differentiable loss. Reports come in a fixed order.
pub fn run_suite(seed: u64) -> Vec<GradReport> {
    let weights = LossWeights::default();
    let geom = GridGeometry::from_origin([0.0; 3], [0.4; 3], [2, 2, 2]).expect("valid geometry");
    vec![
        run("bce_occupancy", seed, |rng| {
            let gt = OccupancyVolume::new(geom, binary(rng)).expect("binary target");
            check_point(
                |x| {
                    let pred = OccupancyVolume::new(geom, x.to_vec()).expect("in range");
                    bce_occupancy(&pred, &gt).expect("same geometry")
                },
                &probs(rng),
            )
        }),
        run("edge_bce", seed ^ 1, |rng| {
            let gt = EdgeMap::new(4, 2, binary(rng)).expect("binary target");
            check_point(
                |x| {
                    let pred = EdgeMap::new(4, 2, x.to_vec()).expect("in range");
                    edge_bce_loss(&pred, &gt).expect("same shape")
                },
                &probs(rng),
            )
        }),
        run("focal", seed ^ 2, |rng| {
            check_point(
                |x| focal_from_true_probs(x, weights.focal_alpha_t, weights.focal_gamma),
                &probs(rng),
            )
        }),
        run("l1", seed ^ 3, |rng| {
            let (pred, target) = separated(rng);
            let mask = field_mask(rng, CELLS / 2);
            let fp = FieldPair::new(2, pred.clone(), target, mask).expect("consistent shapes");
            check_point(|x| l1_field(&fp.with_predicted(x.to_vec()).expect("same shape")), &pred)
        }),
        run("l2", seed ^ 4, |rng| {
            let (pred, target) = separated(rng);
            let mask = field_mask(rng, CELLS / 2);
            let fp = FieldPair::new(2, pred.clone(), target, mask).expect("consistent shapes");
            check_point(|x| l2_field(&fp.with_predicted(x.to_vec()).expect("same shape")), &pred)
        }),
        run("semantic_ce", seed ^ 5, |rng| {
            check_point(cross_entropy_from_true_probs, &probs(rng))
        }),
    ]
}
