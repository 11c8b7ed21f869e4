use std::collections::{BTreeMap, BTreeSet};

use occkit_core::camera::surround_rig;
use occkit_core::geometry::GridGeometry;
use occkit_core::grid::{InstanceId, VoxelGrid};
use occkit_core::lift::DepthBinning;
use occkit_core::synth::{perturb_scene, synth_pixel_lifts, synth_scene, SceneSpec};
use occkit_core::view_transform::{lift_frustum, splat_lss_to_bev};
use occkit_oracles::instance_columns;

fn small_geometry() -> GridGeometry {
    GridGeometry::from_origin([-12.8, -12.8, -1.0], [0.4; 3], [64, 64, 16]).unwrap()
}

fn dilate(cols: &BTreeSet<(usize, usize)>, n: usize) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for &(x, y) in cols {
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                let (a, b) = (x as i64 + dx, y as i64 + dy);
                if (0..n as i64).contains(&a) && (0..n as i64).contains(&b) {
                    out.insert((a as usize, b as usize));
                }
            }
        }
    }
    out
}

/// Fraction of each instance's lifted feature mass that lands within one
/// cell of its footprint, by direct counting over the splatted grid.
fn footprint_fractions(grid: &VoxelGrid, binning: &DepthBinning, noise: f64) -> BTreeMap<InstanceId, f64> {
    let g = *grid.geometry();
    let footprints = instance_columns(grid);
    let mut inside: BTreeMap<InstanceId, f64> = BTreeMap::new();
    let mut total: BTreeMap<InstanceId, f64> = BTreeMap::new();
    for (i, cam) in surround_rig(1.5).iter().enumerate() {
        let s = synth_pixel_lifts(grid, cam, i, binning, noise, 8).unwrap();
        for (&id, cols) in &footprints {
            let lifts: Vec<_> = s
                .lifts
                .iter()
                .zip(&s.hits)
                .filter(|(_, h)| h.instance == id)
                .map(|(l, _)| l.clone())
                .collect();
            if lifts.is_empty() {
                continue;
            }
            let pts = lift_frustum(&lifts, cam, binning).unwrap();
            let bev = splat_lss_to_bev(&pts, &g, grid.class_count()).unwrap();
            let near = dilate(cols, g.dims()[0]);
            let (dx, dy) = (g.dims()[0], g.dims()[1]);
            for x in 0..dx {
                for y in 0..dy {
                    let m: f64 = bev.cell(x, y).iter().sum();
                    *total.entry(id).or_default() += m;
                    if near.contains(&(x, y)) {
                        *inside.entry(id).or_default() += m;
                    }
                }
            }
        }
    }
    total.into_iter().map(|(id, t)| (id, inside[&id] / t)).collect()
}

#[test]
fn lifted_mass_stays_near_each_instance() {
    // 0.1 m bins: finer than a voxel so quantization stays below the margin
    let binning = DepthBinning::new(1.0, 30.0, 290).unwrap();
    for seed in 0..4 {
        let grid = synth_scene(&SceneSpec::new(seed, 6).with_extent(small_geometry())).unwrap();
        for noise in [0.0, 0.1, 0.2] {
            let fractions = footprint_fractions(&grid, &binning, noise);
            assert!(!fractions.is_empty());
            for (id, f) in fractions {
                assert!(f >= 0.9, "seed {seed} noise {noise} instance {id}: {f}");
            }
        }
    }
}

#[test]
fn zero_noise_gives_one_hot_depths_at_the_hit() {
    let grid = synth_scene(&SceneSpec::new(4, 4).with_extent(small_geometry())).unwrap();
    let binning = DepthBinning::new(0.5, 40.0, 79).unwrap();
    let cam = &surround_rig(1.5)[0];
    let s = synth_pixel_lifts(&grid, cam, 0, &binning, 0.0, 16).unwrap();
    assert!(!s.lifts.is_empty());
    for (l, h) in s.lifts.iter().zip(&s.hits) {
        let hot: Vec<usize> = (0..79).filter(|&i| l.depth_probs()[i] == 1.0).collect();
        assert_eq!(hot.len(), 1);
        let (_, axial) = cam.ray_direction(l.pixel.0, l.pixel.1);
        assert_eq!(Some(hot[0]), binning.bin_of(h.depth * axial));
        assert_eq!(l.feature[h.class as usize], 1.0);
        assert_eq!(l.feature.iter().sum::<f64>(), 1.0);
    }
}

#[test]
fn perturb_moves_things_only() {
    let grid = synth_scene(&SceneSpec::new(8, 5).with_extent(small_geometry())).unwrap();
    assert_eq!(perturb_scene(&grid, [0.0; 3], None).unwrap(), grid);
    let moved = perturb_scene(&grid, [0.8, -0.4, 0.0], None).unwrap();
    let g = grid.geometry();
    for f in 0..g.voxel_count() {
        let [x, y, z] = g.unflatten(f);
        if z == 0 {
            assert_eq!(moved.semantics()[f], grid.semantics()[f]);
        }
        if grid.instances()[f] != 0 && x + 2 < 64 && y >= 1 {
            let to = g.flat_index([x + 2, y - 1, z]);
            assert_eq!(moved.instances()[to], grid.instances()[f]);
            assert_eq!(moved.semantics()[to], grid.semantics()[f]);
        }
    }
    assert!(perturb_scene(&grid, [0.3, 0.0, 0.0], None).is_err());
}
