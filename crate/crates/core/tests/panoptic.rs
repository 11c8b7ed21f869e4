use std::collections::{BTreeMap, BTreeSet};

use occkit_core::config::{DEFAULT_CLASS_COUNT, DEFAULT_FREE_CLASS as FREE};
use occkit_core::geometry::GridGeometry;
use occkit_core::losses::ClassProbs;
use occkit_core::panoptic::{
    extract_centers, panoptic_fuse, prediction_from_grid, PanopticConfig, PanopticPrediction,
};
use occkit_core::rng::SplitMix64;
use occkit_core::synth::{synth_scene, SceneSpec};
use occkit_oracles::{instance_columns, nearest_index};
use proptest::prelude::*;

fn geom(n: usize) -> GridGeometry {
    GridGeometry::from_origin([-0.4 * n as f64 / 2.0, -0.4 * n as f64 / 2.0, -1.0], [0.4; 3], [n, n, 2]).unwrap()
}

/// Every voxel of class 4 (a thing class); random peaks and offsets.
fn random_prediction(rng: &mut SplitMix64, n: usize, peaks: usize) -> PanopticPrediction {
    let g = geom(n);
    let probs = ClassProbs::one_hot(DEFAULT_CLASS_COUNT, &vec![4; g.voxel_count()]).unwrap();
    let mut heat: Vec<f64> = (0..n * n).map(|_| rng.uniform(0.0, 0.2)).collect();
    for _ in 0..peaks {
        heat[rng.below((n * n) as u64) as usize] = rng.uniform(0.5, 1.0);
    }
    let offsets = (0..2 * n * n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    PanopticPrediction::new(g, probs, heat, offsets, FREE).unwrap()
}

#[test]
fn assignment_matches_exhaustive_nearest_center() {
    let mut rng = SplitMix64::new(77);
    let cfg = PanopticConfig::default();
    for trial in 0..50 {
        let n = 16 + trial % 9;
        let pred = random_prediction(&mut rng, n, 1 + trial % 6);
        let g = *pred.geometry();
        let centers = extract_centers(pred.center_heatmap(), n, n, &cfg).unwrap();
        let points: Vec<(f64, f64)> = centers.iter().map(|c| g.cell_center(c.row, c.col)).collect();
        let out = panoptic_fuse(&pred, &cfg).unwrap();
        // oracle: nearest center per column, then dense ids in center order
        let nearest: Vec<usize> = (0..n * n)
            .map(|col| {
                let (cx, cy) = g.cell_center(col / n, col % n);
                let q = (cx + pred.offsets()[2 * col], cy + pred.offsets()[2 * col + 1]);
                nearest_index(&points, q).unwrap()
            })
            .collect();
        let used: BTreeSet<usize> = nearest.iter().copied().collect();
        let dense: BTreeMap<usize, u16> = used.iter().enumerate().map(|(i, &c)| (c, i as u16 + 1)).collect();
        for col in 0..n * n {
            let base = g.flat_index([col / n, col % n, 0]);
            assert_eq!(out.instances()[base], dense[&nearest[col]], "trial {trial} column {col}");
            assert_eq!(out.instances()[base + 1], dense[&nearest[col]]);
        }
    }
}

#[test]
fn two_peaks_split_along_the_bisector() {
    let n = 20;
    let g = geom(n);
    let probs = ClassProbs::one_hot(DEFAULT_CLASS_COUNT, &vec![9; g.voxel_count()]).unwrap();
    let mut heat = vec![0.0; n * n];
    heat[g.column_index(4, 10)] = 0.9;
    heat[g.column_index(15, 10)] = 0.8;
    let pred = PanopticPrediction::new(g, probs, heat, vec![0.0; 2 * n * n], FREE).unwrap();
    let out = panoptic_fuse(&pred, &PanopticConfig::default()).unwrap();
    for x in 0..n {
        for y in 0..n {
            // bisector of rows 4 and 15 lies at 9.5
            let expect = if x <= 9 { 1 } else { 2 };
            assert_eq!(out.instances()[g.flat_index([x, y, 0])], expect);
        }
    }
}

#[test]
fn oracle_grids_are_recovered_from_their_targets() {
    let g = GridGeometry::from_origin([-12.8, -12.8, -1.0], [0.4; 3], [64, 64, 16]).unwrap();
    for seed in 0..10 {
        let grid = synth_scene(&SceneSpec::new(seed, 6).with_extent(g)).unwrap();
        let out = panoptic_fuse(&prediction_from_grid(&grid).unwrap(), &PanopticConfig::default()).unwrap();
        assert_eq!(out.semantics(), grid.semantics());
        // same partition into instances, possibly renumbered
        let a: BTreeSet<_> = instance_columns(&grid).into_values().collect();
        let b: BTreeSet<_> = instance_columns(&out).into_values().collect();
        assert_eq!(a, b, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn centers_survive_monotone_rescaling(seed in any::<u64>(), power in 0.25f64..4.0) {
        let mut rng = SplitMix64::new(seed);
        let pred = random_prediction(&mut rng, 18, 8);
        let cfg = PanopticConfig::default();
        let base = extract_centers(pred.center_heatmap(), 18, 18, &cfg).unwrap();
        let warped: Vec<f64> = pred.center_heatmap().iter().map(|h| h.powf(power)).collect();
        let cfg2 = PanopticConfig { center_threshold: cfg.center_threshold.powf(power), ..cfg };
        let moved = extract_centers(&warped, 18, 18, &cfg2).unwrap();
        let set = |cs: &[occkit_core::panoptic::Center]| cs.iter().map(|c| (c.row, c.col)).collect::<BTreeSet<_>>();
        prop_assert_eq!(set(&base), set(&moved));
    }

    #[test]
    fn fuse_is_deterministic_and_dense(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let pred = random_prediction(&mut rng, 12, 5);
        let cfg = PanopticConfig::default();
        let a = panoptic_fuse(&pred, &cfg).unwrap();
        let b = panoptic_fuse(&pred, &cfg).unwrap();
        prop_assert_eq!(a.instances(), b.instances());
        let ids = a.instance_ids();
        prop_assert_eq!(ids, (1..=a.instance_ids().len() as u16).collect::<Vec<_>>());
    }
}
