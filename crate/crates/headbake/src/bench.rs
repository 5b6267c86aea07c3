//! Frame-rate measurement over a fixed-seed reenactment segment.
//!
//! FPS comes from the fused renderer (`Renderer::render`). Per-stage times
//! come from a second, staged pass over the same poses: skinning (bone
//! transforms plus vertex deformation), global decode, per-layer raster into
//! separate images, and compositing of those images.

use std::time::Instant;

use headbake_core::asset::AvatarBundle;
use headbake_core::raster::{composite_layers, RenderSettings, Renderer};
use headbake_core::rig::FramePose;
use serde::Serialize;

use crate::error::CliResult;
use crate::sequence::AnimationSequence;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageMs {
    pub skinning: f64,
    pub global_decode: f64,
    pub raster: Vec<f64>,
    pub composite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub resolution: usize,
    pub layers: usize,
    pub frames: usize,
    pub threads: usize,
    pub fps: f64,
    /// Median wall time of one fused frame.
    pub frame_ms: f64,
    pub stage_ms: StageMs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub resolutions: Vec<usize>,
    /// Layer counts to measure; empty means all layers.
    pub layer_counts: Vec<usize>,
    pub frames: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            resolutions: vec![256, 512, 1024, 2048],
            layer_counts: Vec::new(),
            frames: 30,
            warmup: 2,
            seed: 0,
        }
    }
}

pub fn bench_poses(bundle: &AvatarBundle, frames: usize, seed: u64) -> Vec<FramePose> {
    let m = &bundle.manifest;
    AnimationSequence::synthetic(frames.max(1), m.n_expr, seed)
        .poses(m.n_expr, m.n_joints)
        .expect("synthetic sequence matches the bundle")
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One resolution, one bundle (already trimmed to the wanted layer count).
pub fn bench_one(bundle: &AvatarBundle, poses: &[FramePose], resolution: usize, warmup: usize) -> CliResult<BenchReport> {
    let renderer = Renderer::new(bundle)?;
    let settings = RenderSettings::square(resolution);
    for pose in poses.iter().cycle().take(warmup.max(1)) {
        renderer.render(pose, &settings)?;
    }
    let mut times = Vec::with_capacity(poses.len());
    for pose in poses {
        let t = Instant::now();
        std::hint::black_box(renderer.render(pose, &settings)?);
        times.push(ms(t));
    }
    let frame_ms = median(&mut times);

    let n = bundle.layers.len();
    let mut stage = StageMs {
        skinning: 0.0,
        global_decode: 0.0,
        raster: vec![0.0; n],
        composite: 0.0,
    };
    for pose in poses {
        let t = Instant::now();
        let rig = renderer.rig(pose)?;
        let deformed = renderer.deform(&rig)?;
        stage.skinning += ms(t);
        let t = Instant::now();
        let spatial = renderer.decode(pose)?;
        stage.global_decode += ms(t);
        let state = headbake_core::raster::FrameState { rig, spatial };
        let mut images = Vec::with_capacity(n);
        for (i, d) in deformed.iter().enumerate() {
            let t = Instant::now();
            images.push(renderer.rasterize_layer(i, d, &state, &pose.camera, &settings)?);
            stage.raster[i] += ms(t);
        }
        let t = Instant::now();
        std::hint::black_box(composite_layers(&images)?);
        stage.composite += ms(t);
    }
    let k = poses.len() as f64;
    stage.skinning /= k;
    stage.global_decode /= k;
    stage.composite /= k;
    stage.raster.iter_mut().for_each(|x| *x /= k);
    Ok(BenchReport {
        resolution,
        layers: n,
        frames: poses.len(),
        threads: rayon::current_num_threads(),
        fps: 1e3 / frame_ms,
        frame_ms,
        stage_ms: stage,
    })
}

pub fn run_bench(bundle: &AvatarBundle, cfg: &BenchConfig) -> CliResult<Vec<BenchReport>> {
    let poses = bench_poses(bundle, cfg.frames, cfg.seed);
    let counts = if cfg.layer_counts.is_empty() {
        vec![bundle.layers.len()]
    } else {
        cfg.layer_counts.clone()
    };
    let mut out = Vec::new();
    for &n in &counts {
        let sub = bundle.spread(n)?;
        for &r in &cfg.resolutions {
            out.push(bench_one(&sub, &poses, r, cfg.warmup)?);
        }
    }
    Ok(out)
}

/// Least-squares line `t = a + b·x`; returns `(a, b, max |t − fit| / fit)`.
pub fn affine_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let dev = points
        .iter()
        .map(|&(x, y)| ((y - (a + b * x)) / (a + b * x)).abs())
        .fold(0.0, f64::max);
    (a, b, dev)
}

pub fn format_report(r: &BenchReport) -> String {
    let raster: Vec<String> = r.stage_ms.raster.iter().map(|x| format!("{x:.2}")).collect();
    format!(
        "resolution {0}x{0} layers {1} threads {2}: {3:.2} fps ({4:.2} ms/frame) | skinning {5:.2} ms, global decode {6:.3} ms, raster [{7}] ms, composite {8:.2} ms",
        r.resolution,
        r.layers,
        r.threads,
        r.fps,
        r.frame_ms,
        r.stage_ms.skinning,
        r.stage_ms.global_decode,
        raster.join(", "),
        r.stage_ms.composite
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::tiny_bundle;

    #[test]
    fn report_schema_and_monotone_cost() {
        let b = tiny_bundle(2, 3);
        let cfg = BenchConfig {
            resolutions: vec![16, 128],
            layer_counts: vec![1, 2],
            frames: 2,
            warmup: 1,
            seed: 0,
        };
        let reports = run_bench(&b, &cfg).unwrap();
        assert_eq!(reports.len(), 4);
        assert_eq!(reports[2].layers, 2);
        assert_eq!(reports[2].stage_ms.raster.len(), 2);
        let v = serde_json::to_value(&reports[0]).unwrap();
        for k in ["resolution", "layers", "fps", "stage_ms"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        for k in ["skinning", "global_decode", "raster", "composite"] {
            assert!(v["stage_ms"].get(k).is_some(), "{k}");
        }
        assert!(format_report(&reports[0]).contains("fps"));
    }

    #[test]
    fn affine_fit_recovers_line() {
        let (a, b, dev) = affine_fit(&[(1.0, 3.0), (2.0, 5.0), (4.0, 9.0), (8.0, 17.0)]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && dev < 1e-12);
        let (_, _, dev) = affine_fit(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]);
        assert!(dev > 0.1);
    }

    #[test]
    fn poses_are_seeded() {
        let b = tiny_bundle(1, 0);
        assert_eq!(bench_poses(&b, 3, 7), bench_poses(&b, 3, 7));
        assert_ne!(bench_poses(&b, 3, 7), bench_poses(&b, 3, 8));
    }
}
