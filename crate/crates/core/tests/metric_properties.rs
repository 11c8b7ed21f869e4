use occkit_core::camera::{surround_rig, CameraModel};
use occkit_core::config::{DEFAULT_CLASS_COUNT, DEFAULT_FREE_CLASS as FREE, RAY_THRESHOLDS};
use occkit_core::geometry::GridGeometry;
use occkit_core::grid::VoxelGrid;
use occkit_core::metrics::{
    class_tallies, evaluate, generate_rays, raypq, raypq_at, ray_records, rayiou, EvalConfig, RayRecord,
    DEFAULT_MATCH_IOU,
};
use occkit_core::rng::SplitMix64;
use occkit_core::synth::{perturb_scene, synth_scene, SceneSpec};
use occkit_oracles::{raypq_counts, rayiou_counts, OracleHit};
use proptest::prelude::*;

fn small_geometry() -> GridGeometry {
    GridGeometry::from_origin([-12.8, -12.8, -1.0], [0.4; 3], [64, 64, 16]).unwrap()
}

fn rig() -> Vec<CameraModel> {
    surround_rig(1.5)
}

fn scene(seed: u64, objects: usize) -> VoxelGrid {
    synth_scene(&SceneSpec::new(seed, objects).with_extent(small_geometry())).unwrap()
}

fn perturbed(grid: &VoxelGrid, rng: &mut SplitMix64) -> VoxelGrid {
    let shift = [0.4 * (rng.below(11) as f64 - 5.0), 0.4 * (rng.below(11) as f64 - 5.0), 0.0];
    let drop = grid.instance_ids().first().copied().filter(|_| rng.below(2) == 0);
    perturb_scene(grid, shift, drop).unwrap()
}

fn records(pred: &VoxelGrid, gt: &VoxelGrid, stride: u32) -> Vec<RayRecord> {
    ray_records(pred, gt, &generate_rays(&rig(), stride).unwrap()).unwrap()
}

fn as_oracle(h: Option<occkit_core::metrics::Hit>) -> Option<OracleHit> {
    h.map(|h| OracleHit {
        voxel: h.voxel,
        class: h.class,
        instance: h.instance,
        depth: h.depth,
    })
}

#[test]
fn self_evaluation_is_perfect() {
    let cfg = EvalConfig {
        stride: 16,
        ..EvalConfig::default()
    };
    for seed in 0..8 {
        let grid = scene(seed, 8);
        let r = evaluate(&grid, &grid, &rig(), &cfg).unwrap();
        assert_eq!(r.iou.unwrap().miou, Some(1.0));
        assert_eq!(r.rayiou.unwrap().mean, Some(1.0));
        assert_eq!(r.raypq.unwrap().mean, Some(1.0));
    }
}

#[test]
fn tallies_match_direct_counting() {
    let mut rng = SplitMix64::new(1);
    for seed in 0..6 {
        let gt = scene(seed, 10);
        let pred = perturbed(&gt, &mut rng);
        let recs = records(&pred, &gt, 16);
        let g: Vec<_> = recs.iter().map(|r| as_oracle(r.gt)).collect();
        let p: Vec<_> = recs.iter().map(|r| as_oracle(r.pred)).collect();
        for d in RAY_THRESHOLDS {
            let tallies = class_tallies(&recs, DEFAULT_CLASS_COUNT, d);
            let direct = rayiou_counts(&g, &p, DEFAULT_CLASS_COUNT, d);
            for (t, o) in tallies.iter().zip(&direct) {
                assert_eq!((t.tp, t.fp, t.fn_), *o);
            }
            let pq = raypq_at(&recs, d, DEFAULT_MATCH_IOU);
            assert_eq!((pq.tp, pq.fp, pq.fn_), raypq_counts(&g, &p, d, DEFAULT_MATCH_IOU));
        }
    }
}

#[test]
fn rayiou_is_monotone_in_threshold() {
    let mut rng = SplitMix64::new(2);
    for seed in 0..12 {
        let gt = scene(seed, 10);
        let pred = perturbed(&gt, &mut rng);
        let r = rayiou(&records(&pred, &gt, 16), DEFAULT_CLASS_COUNT, FREE as usize, &RAY_THRESHOLDS);
        let means: Vec<f64> = r.at.iter().map(|a| a.mean.unwrap()).collect();
        assert!(means[0] <= means[1] && means[1] <= means[2], "{means:?}");
        for c in 0..DEFAULT_CLASS_COUNT {
            let v: Vec<Option<f64>> = r.at.iter().map(|a| a.per_class[c]).collect();
            if let [Some(a), Some(b), Some(d)] = v[..] {
                assert!(a <= b && b <= d);
            }
        }
    }
}

#[test]
fn class_renaming_permutes_per_class_scores() {
    let mut rng = SplitMix64::new(3);
    let gt = scene(5, 10);
    let pred = perturbed(&gt, &mut rng);
    // swap car (4) and ground (11) everywhere
    let swap = |g: &VoxelGrid| {
        let sem = g
            .semantics()
            .iter()
            .map(|&c| match c {
                4 => 11,
                11 => 4,
                c => c,
            })
            .collect();
        VoxelGrid::from_parts(*g.geometry(), sem, g.instances().to_vec(), DEFAULT_CLASS_COUNT, FREE).unwrap()
    };
    let a = rayiou(&records(&pred, &gt, 16), DEFAULT_CLASS_COUNT, FREE as usize, &RAY_THRESHOLDS);
    let b = rayiou(&records(&swap(&pred), &swap(&gt), 16), DEFAULT_CLASS_COUNT, FREE as usize, &RAY_THRESHOLDS);
    assert_eq!(a.mean, b.mean);
    for (x, y) in a.at.iter().zip(&b.at) {
        assert_eq!(x.per_class[4], y.per_class[11]);
        assert_eq!(x.per_class[11], y.per_class[4]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn metrics_ignore_ray_order(seed in 0u64..1000, shuffle in any::<u64>()) {
        let gt = scene(seed, 6);
        let mut rng = SplitMix64::new(shuffle);
        let pred = perturbed(&gt, &mut rng);
        let recs = records(&pred, &gt, 32);
        let mut shuffled = recs.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            shuffled.swap(i, j);
        }
        let a = rayiou(&recs, DEFAULT_CLASS_COUNT, FREE as usize, &RAY_THRESHOLDS);
        let b = rayiou(&shuffled, DEFAULT_CLASS_COUNT, FREE as usize, &RAY_THRESHOLDS);
        prop_assert_eq!(a, b);
        let p = raypq(&recs, &RAY_THRESHOLDS, DEFAULT_MATCH_IOU);
        let q = raypq(&shuffled, &RAY_THRESHOLDS, DEFAULT_MATCH_IOU);
        for (x, y) in p.at.iter().zip(&q.at) {
            prop_assert_eq!((x.tp, x.fp, x.fn_), (y.tp, y.fp, y.fn_));
            prop_assert_eq!(x.pq, y.pq);
        }
    }

    #[test]
    fn scores_stay_in_unit_interval(seed in 0u64..1000, salt in any::<u64>()) {
        let gt = scene(seed, 8);
        let pred = perturbed(&gt, &mut SplitMix64::new(salt));
        let r = evaluate(&pred, &gt, &rig(), &EvalConfig { stride: 32, ..EvalConfig::default() }).unwrap();
        let unit = |v: Option<f64>| v.is_none_or(|v| (0.0..=1.0).contains(&v));
        prop_assert!(unit(r.iou.unwrap().miou));
        prop_assert!(unit(r.rayiou.unwrap().mean));
        for at in r.raypq.unwrap().at {
            prop_assert!(unit(at.sq) && unit(at.rq) && unit(at.pq));
        }
    }
}
