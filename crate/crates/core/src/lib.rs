//! Core algorithms for baking layered head avatars and rendering them.
//!
//! The crate is `no_std` with `alloc`. The `std` feature switches scalar math
//! to the platform implementations and `parallel` spreads per-vertex,
//! per-texel and per-tile work over a rayon pool. Neither feature changes
//! numerical results.
//!
//! Pipeline overview:
//!
//! - [`field`]: continuous manifold / radiance / deformation fields, ray
//!   intersection with level sets and a reference ray-traced renderer.
//! - [`bake`]: level-set extraction, selective simplification, vertex
//!   attribute baking, UV atlas generation and texel baking.
//! - [`rig`]: blendshape, pose-corrective and linear-blend-skinning
//!   deformation of baked vertices.
//! - [`decoder`]: the hyper-network appearance decoder that blends radiance
//!   bases per pixel.
//! - [`asset`]: quantization, atlas tiling and the in-memory bundle.
//! - [`raster`]: tile-based software rasterizer and layer compositing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod asset;
pub mod bake;
pub mod camera;
pub mod decoder;
pub mod error;
pub mod field;
pub mod image;
pub mod math;
pub mod mesh;
pub mod metrics;
mod par;
pub mod raster;
pub mod rig;

pub use error::{Error, Result};
pub use math::{Aabb, Mat3, Rigid, Vec3};

/// Number of manifold layers used for full-scale assets.
pub const DEFAULT_LAYERS: usize = 8;
/// Number of radiance bases.
pub const DEFAULT_BASES: usize = 16;
/// Width of the position feature.
pub const DEFAULT_FEATURE_DIM: usize = 8;
/// Expression blendshape count.
pub const DEFAULT_EXPRESSIONS: usize = 50;
/// Pose-corrective joint count (non-root joints).
pub const DEFAULT_POSE_JOINTS: usize = 4;
/// Skinning joint count.
pub const DEFAULT_JOINTS: usize = 5;
