//! File formats, bundle IO and command-line plumbing around `headbake-core`.

pub mod bench;
pub mod bundle_io;
pub mod cli;
pub mod config;
pub mod error;
pub mod images;
pub mod lattice_io;
pub mod manifest;
pub mod pipeline;
pub mod scene_source;
pub mod sequence;
pub mod synthetic;
pub mod web_export;

pub use headbake_core as core;
