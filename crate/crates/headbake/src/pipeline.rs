//! Bake and validate: the scene-to-bundle path and its oracle check.

use headbake_core::asset::AvatarBundle;
use headbake_core::bake::{bake_scene, BakeConfig, LayerStats};
use headbake_core::camera::Camera;
use headbake_core::field::{oracle_render, OracleSettings};
use headbake_core::metrics::{mean_l1, psnr};
use headbake_core::raster::{RenderSettings, Renderer};
use headbake_core::rig::FramePose;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::scene_source::{scene_decoder, LoadedScene};

pub fn bake_bundle(loaded: &LoadedScene, cfg: &BakeConfig, decoder_seed: u64) -> CliResult<(AvatarBundle, Vec<LayerStats>)> {
    let scene = &loaded.scene;
    let start = std::time::Instant::now();
    let baked = bake_scene(scene, cfg)?;
    log::info!("baked {} layers of '{}' in {:.2?}", baked.layers.len(), scene.name, start.elapsed());
    let bundle = AvatarBundle::new(
        &scene.name,
        &loaded.provenance,
        scene.template.clone(),
        baked.layers,
        &baked.textures,
        scene_decoder(scene, decoder_seed),
    )?;
    Ok((bundle, baked.stats))
}

pub fn stats_line(i: usize, s: &LayerStats) -> String {
    format!(
        "layer {i}: level {:+.4} extracted {} faces -> {} faces, {} vertices, {} charts ({} splits), occupancy {:.3}, dilation fills {}",
        s.level,
        s.extracted_faces,
        s.simplify.output_faces,
        s.vertices,
        s.charts,
        s.chart_splits,
        s.occupancy,
        s.textures.dilated
    )
}

/// Rigid validation views: rest pose seen from a small orbit.
pub fn validation_poses(bundle: &AvatarBundle, count: usize) -> Vec<FramePose> {
    const VIEWS: [(f64, f64); 8] = [
        (0.0, 0.0),
        (25.0, 5.0),
        (-25.0, -5.0),
        (45.0, 10.0),
        (-45.0, 15.0),
        (90.0, 0.0),
        (180.0, -10.0),
        (-120.0, 20.0),
    ];
    let m = &bundle.manifest;
    (0..count)
        .map(|i| {
            let (yaw, pitch) = VIEWS[i % VIEWS.len()];
            FramePose::rest(m.n_expr, m.n_joints, Camera::orbit(yaw + 360.0 * (i / VIEWS.len()) as f64 / 7.0, pitch, 9.0))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub max_l1: f64,
    pub min_psnr: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_l1: 0.02,
            min_psnr: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameMetrics {
    pub l1: f64,
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub resolution: usize,
    pub thresholds: Thresholds,
    pub frames: Vec<FrameMetrics>,
    pub mean_l1: f64,
    pub min_psnr: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn from_frames(frames: Vec<FrameMetrics>, resolution: usize, thresholds: Thresholds) -> Self {
        let mean_l1 = frames.iter().map(|f| f.l1).sum::<f64>() / frames.len().max(1) as f64;
        let min_psnr = frames.iter().map(|f| f.psnr).fold(f64::INFINITY, f64::min);
        let pass = !frames.is_empty() && frames.iter().all(|f| f.l1 <= thresholds.max_l1 && f.psnr >= thresholds.min_psnr);
        Self {
            resolution,
            thresholds,
            frames,
            mean_l1,
            min_psnr,
            pass,
        }
    }
}

/// Compares rasterized frames against the reference renderer. The bundle
/// must carry the scene's provenance.
pub fn validate_bundle(
    bundle: &AvatarBundle,
    loaded: &LoadedScene,
    poses: &[FramePose],
    size: usize,
    thresholds: Thresholds,
) -> CliResult<ValidationReport> {
    if bundle.manifest.provenance != loaded.provenance {
        return Err(CliError::data(anyhow::anyhow!(
            "bundle provenance {} does not match scene '{}' ({})",
            bundle.manifest.provenance,
            loaded.scene.name,
            loaded.provenance
        )));
    }
    let renderer = Renderer::new(bundle)?;
    let settings = RenderSettings::square(size);
    let mut frames = Vec::with_capacity(poses.len());
    for pose in poses {
        let raster = renderer.render(pose, &settings)?;
        let oracle = oracle_render(&loaded.scene, &bundle.decoder, pose, size, size, &OracleSettings::default())?;
        frames.push(FrameMetrics {
            l1: mean_l1(&raster, &oracle)?,
            psnr: psnr(&raster, &oracle)?,
        });
    }
    Ok(ValidationReport::from_frames(frames, size, thresholds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_source::{load_scene, SceneSource};
    use headbake_core::field::library::SceneConfig;

    fn small_bake() -> BakeConfig {
        BakeConfig {
            grid_resolution: 48,
            target_faces: 1500,
            texture_resolution: 64,
            samples_per_texel: 1,
            ..BakeConfig::default()
        }
    }

    fn scene(seed: u64) -> LoadedScene {
        let cfg = SceneConfig {
            n_levels: 2,
            n_bases: 3,
            feature_dim: 2,
            n_expr: 4,
            template_vertices: 64,
            seed,
            ..SceneConfig::default()
        };
        load_scene(&SceneSource::Named("sphere-shell".into()), &cfg).unwrap()
    }

    #[test]
    fn bake_then_validate() {
        let loaded = scene(0);
        let (bundle, stats) = bake_bundle(&loaded, &small_bake(), 0).unwrap();
        assert_eq!(stats.len(), 2);
        assert!(stats_line(0, &stats[0]).starts_with("layer 0"));
        let poses = validation_poses(&bundle, 2);
        let loose = Thresholds {
            max_l1: 0.1,
            min_psnr: 15.0,
        };
        let report = validate_bundle(&bundle, &loaded, &poses, 32, loose).unwrap();
        assert!(report.pass, "{report:?}");
        let strict = Thresholds {
            max_l1: 0.0,
            min_psnr: f64::INFINITY,
        };
        assert!(!validate_bundle(&bundle, &loaded, &poses, 32, strict).unwrap().pass);
        let other = scene(1);
        let e = validate_bundle(&bundle, &other, &poses, 32, loose).unwrap_err();
        assert_eq!(e.kind, crate::error::ExitKind::Data);
    }

    #[test]
    fn constant_scene_fails_with_empty_level() {
        let cfg = SceneConfig {
            n_levels: 1,
            n_bases: 1,
            feature_dim: 1,
            n_expr: 2,
            template_vertices: 32,
            ..SceneConfig::default()
        };
        let loaded = load_scene(&SceneSource::Named("constant".into()), &cfg).unwrap();
        let e = bake_bundle(&loaded, &small_bake(), 0).unwrap_err();
        assert!(e.to_string().contains("no isosurface crossings"), "{e}");
        assert_eq!(e.kind, crate::error::ExitKind::Data);
    }
}
