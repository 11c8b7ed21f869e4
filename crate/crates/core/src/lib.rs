//! Geometry, view-transform, loss and ray-metric kernels for camera-based
//! 3D panoptic occupancy.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`], [`grid`], [`camera`], [`bev`], [`lift`], [`config`]: shared
//!   domain types and coordinate transforms.
//! - [`view_transform`]: depth-bin lifting, Gaussian splatting, hybrid blend
//!   and multi-view fusion into bird's-eye view.
//! - [`edge`]: pseudo edge labels from semantic maps and the edge head.
//! - [`losses`]: every loss term with analytic gradients; [`gradcheck`]
//!   verifies them against central finite differences.
//! - [`panoptic`]: decoding head outputs into a panoptic voxel grid.
//! - [`metrics`]: voxel mIoU and ray-cast RayIoU / RayPQ.
//! - [`synth`]: deterministic procedural scenes for tests and demos.
//! - [`io`]: OCCG volumes, rig configs, CSV and PGM writers.
//!
//! Data-parallel kernels use rayon when the `parallel` feature is enabled
//! (the default). Results never depend on the worker count; see [`par`].

pub mod bev;
pub mod camera;
pub mod config;
pub mod edge;
pub mod error;
pub mod geometry;
pub mod gradcheck;
pub mod grid;
pub mod io;
pub mod lift;
pub mod losses;
pub mod metrics;
pub mod panoptic;
pub mod par;
pub mod rng;
pub mod synth;
pub mod view_transform;

pub use bev::BevGrid;
pub use camera::CameraModel;
pub use config::LossWeights;
pub use error::{Error, Result};
pub use geometry::{official_geometry, GridGeometry, Vec3, VoxelIndex};
pub use grid::{ClassId, InstanceId, VoxelGrid};
pub use lift::{DepthBinning, GaussianPrimitive, PixelLift};
