use std::path::Path;
use std::time::Instant;

use occkit_core::bev::BevGrid;
use occkit_core::config::LossWeights;
use occkit_core::edge::{bev_semantics, edge_magnitude, grid_edges, EdgeKernel};
use occkit_core::gradcheck::run_suite;
use occkit_core::io::{
    bev_csv, edge_csv, edge_pgm, grad_csv, read_occg, read_rig, report_csv, write_file, write_occg, write_rig,
};
use occkit_core::lift::DepthBinning;
use occkit_core::metrics::{cast_rays, evaluate, generate_rays, EvalConfig, DEFAULT_STRIDE};
use occkit_core::synth::{synth_pixel_lifts, synth_scene, SceneSpec};
use occkit_core::view_transform::{
    blend_hybrid, fuse_views, lift_frustum, splat_gaussians_to_bev, splat_lss_into, BlendConfig,
};

use crate::{BenchArgs, EdgeArgs, EvalArgs, Failure, GradCheckArgs, LiftArgs, LiftMode, SynthArgs};

/// Pixels lifted per frustum batch; bounds memory at official resolution.
const LIFT_CHUNK: usize = 512;

pub fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let spec = SceneSpec::new(a.seed, a.objects);
    let grid = synth_scene(&spec)?;
    write_occg(&a.out, &grid)?;
    write_rig(&a.rig, &spec.rig)?;
    Ok(())
}

pub fn lift(a: &LiftArgs) -> Result<(), Failure> {
    if !(a.dmin.is_finite() && a.dmax.is_finite() && a.dmin < a.dmax) {
        return Err(Failure::Usage(format!("--dmin {} must be below --dmax {}", a.dmin, a.dmax)));
    }
    let binning = DepthBinning::new(a.dmin, a.dmax, a.bins as usize)?;
    let grid = read_occg(&a.scene)?;
    let rig = read_rig(&a.rig)?;
    let g = *grid.geometry();
    let channels = grid.class_count();
    let weights = LossWeights::default();

    let mut views_d = Vec::new();
    let mut views_g = Vec::new();
    for (i, cam) in rig.iter().enumerate() {
        let s = synth_pixel_lifts(&grid, cam, i, &binning, a.noise, a.stride)?;
        if a.mode != LiftMode::Gauss {
            let mut view = BevGrid::zeros(g, channels);
            for chunk in s.lifts.chunks(LIFT_CHUNK) {
                splat_lss_into(&mut view, &lift_frustum(chunk, cam, &binning)?)?;
            }
            views_d.push(view);
        }
        if a.mode != LiftMode::Lss {
            views_g.push(splat_gaussians_to_bev(&s.gaussians, &g, channels, &weights)?);
        }
    }
    let bev = match a.mode {
        LiftMode::Lss => fuse_views(&views_d)?,
        LiftMode::Gauss => fuse_views(&views_g)?,
        LiftMode::Hybrid => {
            let cfg = BlendConfig::new(a.alpha)?;
            blend_hybrid(&fuse_views(&views_g)?, &fuse_views(&views_d)?, &cfg)?
        }
    };
    write_file(&a.out, bev_csv(&bev))?;
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn edge(a: &EdgeArgs) -> Result<(), Failure> {
    let kernel = EdgeKernel::new(a.kernel.into(), a.size)?;
    let grid = read_occg(&a.scene)?;
    let edges = grid_edges(&grid, &kernel);
    if is_csv(&a.out) {
        write_file(&a.out, edge_csv(&edges))?;
    } else {
        write_file(&a.out, edge_pgm(&edges))?;
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), Failure> {
    let pred = read_occg(&a.pred)?;
    let gt = read_occg(&a.gt)?;
    let rig = read_rig(&a.rig)?;
    let cfg = EvalConfig {
        stride: a.stride,
        metrics: a.metrics,
        ..EvalConfig::default()
    };
    let report = evaluate(&pred, &gt, &rig, &cfg)?;
    write_file(&a.out, report_csv(&report))?;
    Ok(())
}

pub fn grad_check(a: &GradCheckArgs) -> Result<(), Failure> {
    let reports = run_suite(a.seed);
    write_file(&a.out, grad_csv(&reports))?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("gradient check failed for {}", failed.join(", "))))
    }
}

/// Mean wall time in milliseconds of `f` over `iterations` runs.
fn time_ms(iterations: u32, mut f: impl FnMut()) -> f64 {
    let start = Instant::now();
    for _ in 0..iterations {
        f();
    }
    start.elapsed().as_secs_f64() * 1e3 / iterations as f64
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Thread counts compared by `bench`: sequential, plus the requested count
/// (or every available core when `--threads` is 1).
fn bench_threads(requested: u32) -> Vec<usize> {
    if cfg!(not(feature = "parallel")) {
        return vec![1];
    }
    let n = if requested > 1 {
        requested as usize
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    };
    if n > 1 { vec![1, n] } else { vec![1] }
}

pub fn bench(a: &BenchArgs, threads: u32) -> Result<(), Failure> {
    let spec = SceneSpec::new(0, 12);
    let grid = synth_scene(&spec)?;
    let g = *grid.geometry();
    let channels = grid.class_count();
    let binning = DepthBinning::new(1.0, 60.0, 118)?;
    let cam = &spec.rig[0];
    let lifts = synth_pixel_lifts(&grid, cam, 0, &binning, 0.2, 8)?;
    let points = lift_frustum(&lifts.lifts[..lifts.lifts.len().min(2048)], cam, &binning)?;
    let rays = generate_rays(&spec.rig, DEFAULT_STRIDE)?;
    let labels = bev_semantics(&grid);
    let sobel = EdgeKernel::default();
    let weights = LossWeights::default();

    let mut out = String::from("kernel,threads,iterations,mean_ms\n");
    for t in bench_threads(threads) {
        let rows: Vec<(&str, f64)> = with_threads(t, || {
            vec![
                ("splat_lss", time_ms(a.iterations, || {
                    let mut bev = BevGrid::zeros(g, channels);
                    splat_lss_into(&mut bev, &points).expect("splat");
                })),
                ("splat_gaussians", time_ms(a.iterations, || {
                    splat_gaussians_to_bev(&lifts.gaussians, &g, channels, &weights).expect("splat");
                })),
                ("cast_rays", time_ms(a.iterations, || {
                    cast_rays(&grid, &rays);
                })),
                ("edge_magnitude", time_ms(a.iterations, || {
                    edge_magnitude(&labels, &sobel);
                })),
            ]
        });
        for (name, ms) in rows {
            out.push_str(&format!("{name},{t},{},{ms:.3}\n", a.iterations));
        }
    }
    write_file(&a.out, out)?;
    Ok(())
}
