//! TOML configuration. Every table mirrors the flags of one command; a flag
//! given on the command line wins over the file, the file wins over the
//! built-in default.
//!
//! ```toml
//! threads = 8
//!
//! [scene]
//! levels = 8
//! level_lo = -0.2
//! level_hi = 0.0
//! bases = 16
//! feature_dim = 8
//! expr = 50
//! scene_seed = 0
//! template_vertices = 512
//!
//! [bake]
//! grid = 256
//! target_faces = 10000
//! theta_max = 120.0
//! back_ratio = 0.2
//! texture = 1024
//! spt = 16
//! seed = 0
//! gutter = 2
//! dilation = 4
//! chart_angle = 60.0
//!
//! [render]
//! size = 512
//! tile = 32
//! fov = 14.0
//! culling = false
//! raw = false
//!
//! [validate]
//! poses = 5
//! size = 256
//! max_l1 = 0.02
//! min_psnr = 30.0
//!
//! [bench]
//! resolutions = [256, 512, 1024, 2048]
//! layers = [1, 2, 4, 8]
//! frames = 30
//! warmup = 2
//! seed = 0
//! ```

use std::path::Path;

use headbake_core::bake::BakeConfig;
use headbake_core::field::library::SceneConfig;
use headbake_core::raster::RenderSettings;
use serde::{Deserialize, Serialize};

use crate::bench::BenchConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::Thresholds;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct SceneArgs {
    /// Number of layers (level sets).
    #[arg(long)]
    pub levels: Option<usize>,
    /// Innermost level.
    #[arg(long, allow_negative_numbers = true)]
    pub level_lo: Option<f64>,
    /// Outermost level.
    #[arg(long, allow_negative_numbers = true)]
    pub level_hi: Option<f64>,
    /// Radiance bases per point.
    #[arg(long)]
    pub bases: Option<usize>,
    /// Position feature width.
    #[arg(long)]
    pub feature_dim: Option<usize>,
    /// Expression coefficients.
    #[arg(long)]
    pub expr: Option<usize>,
    /// Seed for the scene's random pattern, rigging and decoder.
    #[arg(long)]
    pub scene_seed: Option<u64>,
    /// Synthetic template vertex count.
    #[arg(long)]
    pub template_vertices: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct BakeArgs {
    /// Sampling grid resolution per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Face budget per layer after simplification.
    #[arg(long)]
    pub target_faces: Option<usize>,
    /// Back-face angle threshold in degrees.
    #[arg(long)]
    pub theta_max: Option<f64>,
    /// Fraction of back faces kept.
    #[arg(long)]
    pub back_ratio: Option<f64>,
    /// Texture resolution per tile.
    #[arg(long)]
    pub texture: Option<usize>,
    /// Samples per texel (a perfect square).
    #[arg(long)]
    pub spt: Option<usize>,
    /// Texel jitter seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gutter texels between charts.
    #[arg(long)]
    pub gutter: Option<usize>,
    /// Dilation passes into the gutter.
    #[arg(long)]
    pub dilation: Option<usize>,
    /// Maximum normal deviation within one chart, degrees.
    #[arg(long)]
    pub chart_angle: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RenderArgs {
    /// Output width and height.
    #[arg(long)]
    pub size: Option<usize>,
    /// Tile edge in pixels.
    #[arg(long)]
    pub tile: Option<usize>,
    /// Vertical field of view in degrees (overrides the pose camera).
    #[arg(long)]
    pub fov: Option<f64>,
    /// Cull back-facing triangles.
    #[arg(long)]
    pub culling: Option<bool>,
    /// Also write raw float dumps.
    #[arg(long)]
    pub raw: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ValidateArgs {
    /// Number of validation views.
    #[arg(long)]
    pub poses: Option<usize>,
    /// Validation resolution.
    #[arg(long)]
    pub size: Option<usize>,
    /// Largest mean per-pixel L1 that passes.
    #[arg(long)]
    pub max_l1: Option<f64>,
    /// Smallest PSNR (dB) that passes.
    #[arg(long)]
    pub min_psnr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct BenchArgs {
    /// Square resolutions to measure.
    #[arg(long, value_delimiter = ',')]
    pub resolutions: Option<Vec<usize>>,
    /// Layer counts to measure (layers spread evenly over the level range).
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Timed frames per configuration.
    #[arg(long)]
    pub frames: Option<usize>,
    /// Untimed frames before measuring (at least 1).
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Pose sequence seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub threads: Option<usize>,
    #[serde(default)]
    pub scene: SceneArgs,
    #[serde(default)]
    pub bake: BakeArgs,
    #[serde(default)]
    pub render: RenderArgs,
    #[serde(default)]
    pub validate: ValidateArgs,
    #[serde(default)]
    pub bench: BenchArgs,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(anyhow::anyhow!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(crate::error::FormatError::io(path, e)))?;
        Self::parse(&text)
    }
}

macro_rules! overlay {
    ($flags:expr, $file:expr; $($f:ident),*) => {
        Self { $($f: $flags.$f.clone().or_else(|| $file.$f.clone()),)* }
    };
}

impl SceneArgs {
    pub fn overlay(&self, file: &Self) -> Self {
        overlay!(self, file; levels, level_lo, level_hi, bases, feature_dim, expr, scene_seed, template_vertices)
    }

    pub fn resolve(&self) -> SceneConfig {
        let d = SceneConfig::default();
        SceneConfig {
            n_levels: self.levels.unwrap_or(d.n_levels),
            level_lo: self.level_lo.unwrap_or(d.level_lo),
            level_hi: self.level_hi.unwrap_or(d.level_hi),
            n_bases: self.bases.unwrap_or(d.n_bases),
            feature_dim: self.feature_dim.unwrap_or(d.feature_dim),
            n_expr: self.expr.unwrap_or(d.n_expr),
            seed: self.scene_seed.unwrap_or(d.seed),
            template_vertices: self.template_vertices.unwrap_or(d.template_vertices),
        }
    }
}

impl BakeArgs {
    pub fn overlay(&self, file: &Self) -> Self {
        overlay!(self, file; grid, target_faces, theta_max, back_ratio, texture, spt, seed, gutter, dilation, chart_angle)
    }

    pub fn resolve(&self) -> BakeConfig {
        let d = BakeConfig::default();
        BakeConfig {
            grid_resolution: self.grid.unwrap_or(d.grid_resolution),
            target_faces: self.target_faces.unwrap_or(d.target_faces),
            theta_max_deg: self.theta_max.unwrap_or(d.theta_max_deg),
            back_ratio: self.back_ratio.unwrap_or(d.back_ratio),
            texture_resolution: self.texture.unwrap_or(d.texture_resolution),
            samples_per_texel: self.spt.unwrap_or(d.samples_per_texel),
            seed: self.seed.unwrap_or(d.seed),
            gutter: self.gutter.unwrap_or(d.gutter),
            dilation_passes: self.dilation.unwrap_or(d.dilation_passes),
            max_chart_angle_deg: self.chart_angle.unwrap_or(d.max_chart_angle_deg),
        }
    }
}

impl RenderArgs {
    pub fn overlay(&self, file: &Self) -> Self {
        overlay!(self, file; size, tile, fov, culling, raw)
    }

    pub fn resolve(&self) -> RenderSettings {
        let d = RenderSettings::default();
        let size = self.size.unwrap_or(d.width);
        RenderSettings {
            width: size,
            height: size,
            tile_size: self.tile.unwrap_or(d.tile_size),
            backface_culling: self.culling.unwrap_or(d.backface_culling),
            fov_y_deg: self.fov.or(d.fov_y_deg),
            ..d
        }
    }
}

impl ValidateArgs {
    pub fn overlay(&self, file: &Self) -> Self {
        overlay!(self, file; poses, size, max_l1, min_psnr)
    }

    pub fn thresholds(&self) -> Thresholds {
        let d = Thresholds::default();
        Thresholds {
            max_l1: self.max_l1.unwrap_or(d.max_l1),
            min_psnr: self.min_psnr.unwrap_or(d.min_psnr),
        }
    }
}

impl BenchArgs {
    pub fn overlay(&self, file: &Self) -> Self {
        overlay!(self, file; resolutions, layers, frames, warmup, seed)
    }

    pub fn resolve(&self) -> BenchConfig {
        let d = BenchConfig::default();
        BenchConfig {
            resolutions: self.resolutions.clone().unwrap_or(d.resolutions),
            layer_counts: self.layers.clone().unwrap_or(d.layer_counts),
            frames: self.frames.unwrap_or(d.frames),
            warmup: self.warmup.unwrap_or(d.warmup).max(1),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}
