use occkit_core::config::{DEFAULT_CLASS_COUNT, DEFAULT_FREE_CLASS};
use occkit_core::geometry::GridGeometry;
use occkit_core::grid::VoxelGrid;
use occkit_core::metrics::{traverse, Ray};
use occkit_core::rng::SplitMix64;
use occkit_oracles::{march_ray, march_ray_with_step};

/// Random blob scene: about `density` of the voxels carry random classes.
fn random_grid(rng: &mut SplitMix64, dims: [usize; 3], density: f64) -> VoxelGrid {
    let g = GridGeometry::from_origin([-6.4, -6.4, -1.0], [0.4; 3], dims).unwrap();
    let n = g.voxel_count();
    let sem = (0..n)
        .map(|_| {
            if rng.next_f64() < density {
                rng.below(17) as u8
            } else {
                DEFAULT_FREE_CLASS
            }
        })
        .collect();
    VoxelGrid::from_parts(g, sem, vec![0; n], DEFAULT_CLASS_COUNT, DEFAULT_FREE_CLASS).unwrap()
}

fn random_ray(rng: &mut SplitMix64, g: &GridGeometry) -> Ray {
    // origins inside the grid and in a shell around it
    let origin = std::array::from_fn(|k| {
        let (lo, hi) = (g.min()[k], g.max()[k]);
        let pad = 0.3 * (hi - lo);
        rng.uniform(lo - pad, hi + pad)
    });
    let aimed = rng.below(2) == 0;
    let dir = loop {
        let d: [f64; 3] = if aimed {
            // towards a random interior point
            std::array::from_fn(|k| rng.uniform(g.min()[k], g.max()[k]) - origin[k])
        } else {
            std::array::from_fn(|_| rng.uniform(-1.0, 1.0))
        };
        let n2: f64 = d.iter().map(|v| v * v).sum();
        if n2 > 1e-4 && (aimed || n2 <= 1.0) {
            break d;
        }
    };
    Ray::new(origin, dir, (0, 0, 0)).unwrap()
}

#[test]
fn dda_matches_marching_oracle_on_ten_thousand_rays() {
    let mut rng = SplitMix64::new(0x7261_7973);
    let mut compared = 0;
    let mut hits = 0;
    for scene in 0..10 {
        let density = [0.01, 0.03, 0.08][scene % 3];
        let grid = random_grid(&mut rng, [32, 32, 16], density);
        for _ in 0..1000 {
            let ray = random_ray(&mut rng, grid.geometry());
            let fast = traverse(&grid, &ray);
            let slow = march_ray(&grid, &ray);
            match (fast, slow) {
                (None, None) => {}
                (Some(f), Some(s)) => {
                    assert_eq!(f.voxel, s.voxel, "ray {ray:?}");
                    assert_eq!(f.class, s.class);
                    assert_eq!(f.depth, s.depth);
                    hits += 1;
                }
                _ => panic!("DDA {fast:?} vs oracle {slow:?} for {ray:?}"),
            }
            compared += 1;
        }
    }
    assert_eq!(compared, 10_000);
    assert!(hits > 2_000, "only {hits} rays hit anything");
}

#[test]
fn axis_aligned_rays_through_voxel_centers() {
    let mut rng = SplitMix64::new(11);
    let grid = random_grid(&mut rng, [16, 16, 16], 0.05);
    let g = *grid.geometry();
    for _ in 0..500 {
        let v = [rng.below(16) as usize, rng.below(16) as usize, rng.below(16) as usize];
        let c = g.voxel_center(v);
        let axis = rng.below(3) as usize;
        let mut dir = [0.0; 3];
        dir[axis] = if rng.below(2) == 0 { 1.0 } else { -1.0 };
        let ray = Ray::new(c, dir, (0, 0, 0)).unwrap();
        let fast = traverse(&grid, &ray).map(|h| (h.voxel, h.depth));
        let slow = march_ray(&grid, &ray).map(|h| (h.voxel, h.depth));
        assert_eq!(fast, slow);
    }
}

#[test]
fn rays_through_edges_and_corners() {
    let mut rng = SplitMix64::new(13);
    let grid = random_grid(&mut rng, [16, 16, 16], 0.15);
    let g = *grid.geometry();
    let dirs: [[f64; 3]; 8] = [
        [1.0, 1.0, 0.0],
        [1.0, -1.0, -1.0],
        [-1.0, 0.0, 1.0],
        [2.0, 1.0, 0.0],
        [1.0, 2.0, -2.0],
        [-3.0, 1.0, 1.0],
        [0.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
    ];
    let mut hits = 0;
    for _ in 0..300 {
        // start on a voxel corner so crossings on several axes coincide
        let c: [f64; 3] = std::array::from_fn(|k| g.min()[k] + (1 + rng.below(14)) as f64 * 0.4);
        for d in dirs {
            let ray = Ray::new(c, d, (0, 0, 0)).unwrap();
            let fast = traverse(&grid, &ray).map(|h| (h.voxel, h.depth));
            let slow = march_ray(&grid, &ray).map(|h| (h.voxel, h.depth));
            assert_eq!(fast, slow, "{ray:?}");
            hits += fast.is_some() as usize;
        }
    }
    assert!(hits > 1000);
}

#[test]
fn oracle_result_does_not_depend_on_step() {
    let mut rng = SplitMix64::new(21);
    let grid = random_grid(&mut rng, [32, 32, 16], 0.02);
    for _ in 0..300 {
        let ray = random_ray(&mut rng, grid.geometry());
        let fine = march_ray_with_step(&grid, &ray, 0.004);
        for step in [0.02, 0.04, 0.1, 0.4] {
            assert_eq!(march_ray_with_step(&grid, &ray, step), fine);
        }
    }
}
