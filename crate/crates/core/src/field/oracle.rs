//! Reference renderer: traces level-set hits per pixel, decodes appearance at
//! each hit and accumulates front to back.

use alloc::vec::Vec;

use super::trace::{ray_isosurface_intersections, IsoHit, TraceSettings};
use super::FieldScene;
use crate::decoder::{global_eval, DecoderWeights, SpatialWeights, MAX_SPATIAL_WIDTH};
use crate::image::ImageF;
use crate::math::{Rigid, Vec3};
use crate::rig::{FramePose, FrameRig};
use crate::{par, Error, Result};

/// Which hits along a ray contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HitSelection {
    /// Only the nearest crossing of each level, which is what a per-layer
    /// depth test keeps.
    #[default]
    FirstPerLevel,
    /// Every crossing.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleSettings {
    pub trace: TraceSettings,
    pub selection: HitSelection,
}

/// Front-to-back accumulation of `(color, alpha)` pairs ordered near to far.
/// Returns premultiplied RGBA.
pub fn accumulate_front_to_back(samples: &[([f32; 3], f32)]) -> [f32; 4] {
    let mut out = [0.0f32; 4];
    let mut transmittance = 1.0f32;
    for (c, a) in samples {
        let w = transmittance * a;
        out[0] += w * c[0];
        out[1] += w * c[1];
        out[2] += w * c[2];
        transmittance *= 1.0 - a;
    }
    out[3] = 1.0 - transmittance;
    out
}

/// Keeps the hits selected by `selection`; input must be sorted by `t`.
pub fn select_hits(hits: &[IsoHit], n_levels: usize, selection: HitSelection) -> Vec<IsoHit> {
    match selection {
        HitSelection::All => hits.to_vec(),
        HitSelection::FirstPerLevel => {
            let mut seen = alloc::vec![false; n_levels];
            hits.iter()
                .filter(|h| !core::mem::replace(&mut seen[h.level_index], true))
                .copied()
                .collect()
        }
    }
}

/// Renders `scene` as seen by `pose.camera`. The pose must be rigid: zero
/// expression and identity rotations everywhere except the root.
pub fn oracle_render(
    scene: &FieldScene,
    decoder: &DecoderWeights,
    pose: &FramePose,
    width: usize,
    height: usize,
    settings: &OracleSettings,
) -> Result<ImageF> {
    scene.validate()?;
    decoder.validate()?;
    Error::check_len("decoder bases", scene.n_bases(), decoder.n_bases)?;
    Error::check_len("decoder feature width", scene.feature_dim(), decoder.feature_dim)?;
    let template = &scene.template;
    let root = template.root()?;
    if !pose.is_rigid(root) {
        return Err(Error::Unsupported(
            "reference rendering supports rigid poses only".into(),
        ));
    }
    let frame = FrameRig::new(template, pose)?;
    let body = frame.bones[root];
    let sw = global_eval(
        decoder,
        &template.appearance_features(&pose.rotations)?,
        &pose.expression,
    )?;
    let ctx = PixelContext {
        scene,
        sw: &sw,
        camera_from_canonical: pose.camera.view.compose(&body),
        canonical_from_world: body.inverse(),
        pose,
        width,
        height,
        settings,
    };
    let rows = par::map_range(height, |y| {
        let mut row = alloc::vec![0.0f32; width * 4];
        for x in 0..width {
            row[x * 4..x * 4 + 4].copy_from_slice(&ctx.shade_pixel(x, y));
        }
        row
    });
    let data: Vec<f32> = rows.into_iter().flatten().collect();
    ImageF::from_data(width, height, 4, data)
}

struct PixelContext<'a> {
    scene: &'a FieldScene,
    sw: &'a SpatialWeights,
    camera_from_canonical: Rigid,
    canonical_from_world: Rigid,
    pose: &'a FramePose,
    width: usize,
    height: usize,
    settings: &'a OracleSettings,
}

impl PixelContext<'_> {
    fn shade_pixel(&self, x: usize, y: usize) -> [f32; 4] {
        let cam = &self.pose.camera;
        let (origin_w, dir_w) = cam.pixel_ray(x, y, self.width, self.height);
        let view_dir = cam
            .camera_ray(x as f64 + 0.5, y as f64 + 0.5, self.width, self.height)
            .to_f32();
        let origin = self.canonical_from_world.apply(origin_w);
        let dir = self.canonical_from_world.apply_vector(dir_w);
        let hits = ray_isosurface_intersections(
            self.scene.manifold.as_ref(),
            &self.scene.bounds,
            origin,
            dir,
            &self.scene.levels,
            &self.settings.trace,
        );
        let hits = select_hits(&hits, self.scene.levels.len(), self.settings.selection);
        if hits.is_empty() {
            return [0.0; 4];
        }
        let mut sample = self.scene.new_sample();
        let d_p = self.scene.feature_dim();
        let mut input = [0.0f32; MAX_SPATIAL_WIDTH];
        let mut w = alloc::vec![0.0f32; self.scene.n_bases()];
        let shaded: Vec<([f32; 3], f32)> = hits
            .iter()
            .map(|h| {
                self.scene.radiance_eval_into(h.position, &mut sample);
                let n = self.camera_normal(h.normal);
                input[..d_p].copy_from_slice(&sample.feature);
                input[d_p..d_p + 3].copy_from_slice(&view_dir);
                input[d_p + 3..d_p + 6].copy_from_slice(&n);
                self.sw.weights_into(&input[..d_p + 6], &mut w);
                crate::decoder::blend_radiance(&w, &sample.colors, &sample.occupancies)
            })
            .collect();
        accumulate_front_to_back(&shaded)
    }

    fn camera_normal(&self, n: Vec3) -> [f32; 3] {
        self.camera_from_canonical.apply_vector(n).normalize().to_f32()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Camera;
    use crate::decoder::{softmax_in_place, DecoderConfig};
    use crate::field::library::{self, SceneConfig};

    #[test]
    fn hand_expanded_two_layers() {
        let c1 = [1.0, 0.2, 0.0];
        let c2 = [0.0, 0.4, 1.0];
        let out = accumulate_front_to_back(&[(c1, 0.5), (c2, 0.5)]);
        for k in 0..3 {
            assert!((out[k] - (0.5 * c1[k] + 0.25 * c2[k])).abs() < 1e-7);
        }
        assert!((out[3] - 0.75).abs() < 1e-7);
    }

    #[test]
    fn matches_back_to_front_over() {
        let samples = [([0.3, 0.6, 0.9], 0.4), ([0.8, 0.1, 0.5], 0.7), ([0.2, 0.2, 0.2], 0.9)];
        let ftb = accumulate_front_to_back(&samples);
        let mut btf = [0.0f32; 4];
        for (c, a) in samples.iter().rev() {
            for k in 0..3 {
                btf[k] = c[k] * a + (1.0 - a) * btf[k];
            }
            btf[3] = a + (1.0 - a) * btf[3];
        }
        for k in 0..4 {
            assert!((ftb[k] - btf[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn first_per_level_keeps_nearest() {
        let h = |t: f64, level_index| IsoHit {
            t,
            position: Vec3::ZERO,
            level_index,
            normal: Vec3::Z,
            entering: true,
        };
        let hits = [h(1.0, 1), h(1.5, 0), h(2.0, 0), h(3.0, 1)];
        let kept = select_hits(&hits, 2, HitSelection::FirstPerLevel);
        assert_eq!(kept.iter().map(|h| h.t).collect::<Vec<_>>(), [1.0, 1.5]);
        assert_eq!(select_hits(&hits, 2, HitSelection::All).len(), 4);
    }

    #[test]
    fn opaque_constant_layer() {
        let cfg = SceneConfig {
            n_levels: 1,
            n_bases: 1,
            ..SceneConfig::default()
        };
        let scene = library::constant_sphere(&cfg, [0.3, 0.5, 0.7], 1.0);
        let dec = DecoderWeights::random(
            &DecoderConfig {
                n_bases: 1,
                ..DecoderConfig::default()
            },
            3,
        );
        let pose = FramePose::rest(cfg.n_expr, 5, Camera::orbit(0.0, 0.0, 9.0));
        let img = oracle_render(&scene, &dec, &pose, 32, 32, &OracleSettings::default()).unwrap();
        let center = img.pixel(16, 16);
        for (a, b) in center.iter().zip([0.3, 0.5, 0.7, 1.0]) {
            assert!((a - b).abs() < 1e-6);
        }
        assert_eq!(img.pixel(0, 0), &[0.0; 4]);
    }

    #[test]
    fn non_rigid_pose_is_rejected() {
        let cfg = SceneConfig::default();
        let scene = library::sphere_shell(&cfg);
        let dec = DecoderWeights::random(&DecoderConfig::default(), 1);
        let mut pose = FramePose::rest(cfg.n_expr, 5, Camera::default());
        pose.expression[0] = 0.5;
        assert!(matches!(
            oracle_render(&scene, &dec, &pose, 4, 4, &OracleSettings::default()),
            Err(Error::Unsupported(_))
        ));
    }

    /// Independent per-pixel re-implementation with naive loops.
    #[test]
    fn sphere_shell_matches_scalar_oracle() {
        let cfg = SceneConfig::default();
        let scene = library::sphere_shell(&cfg);
        let dec = DecoderWeights::random(&DecoderConfig::default(), 11);
        let pose = FramePose::rest(cfg.n_expr, 5, Camera::orbit(15.0, -10.0, 9.0));
        let (wd, ht) = (64, 64);
        let settings = OracleSettings::default();
        let img = oracle_render(&scene, &dec, &pose, wd, ht, &settings).unwrap();

        let theta = scene.template.appearance_features(&pose.rotations).unwrap();
        let params = crate::decoder::global_forward(&dec, &theta, &pose.expression).unwrap();
        let sw = SpatialWeights::from_params(&dec.spatial, &params).unwrap();
        let cam = &pose.camera;
        for y in (0..ht).step_by(3) {
            for x in (0..wd).step_by(3) {
                let (o, d) = cam.pixel_ray(x, y, wd, ht);
                let v = cam.camera_ray(x as f64 + 0.5, y as f64 + 0.5, wd, ht).to_f32();
                let hits = ray_isosurface_intersections(
                    scene.manifold.as_ref(),
                    &scene.bounds,
                    o,
                    d,
                    &scene.levels,
                    &settings.trace,
                );
                let mut seen = [false; 8];
                let mut rgb = [0.0f32; 3];
                let mut trans = 1.0f32;
                for h in &hits {
                    if seen[h.level_index] {
                        continue;
                    }
                    seen[h.level_index] = true;
                    let s = scene.radiance_eval(h.position);
                    let n = cam.view.apply_vector(h.normal).normalize().to_f32();
                    let mut input: Vec<f32> = s.feature.clone();
                    input.extend_from_slice(&v);
                    input.extend_from_slice(&n);
                    // Scalar spatial net.
                    let mut act = input;
                    for layer in &sw.layers {
                        let mut next = Vec::new();
                        for o in 0..layer.outputs {
                            let mut acc = layer.bias[o];
                            for i in 0..layer.inputs {
                                acc += act[i] * layer.weights_t[i * layer.outputs + o];
                            }
                            next.push(layer.activation.apply_f32(acc));
                        }
                        act = next;
                    }
                    softmax_in_place(&mut act);
                    let mut c = [0.0f32; 3];
                    let mut a = 0.0f32;
                    for i in 0..act.len() {
                        for k in 0..3 {
                            c[k] += act[i] * s.colors[i][k];
                        }
                        a += act[i] * s.occupancies[i];
                    }
                    for k in 0..3 {
                        rgb[k] += trans * a * c[k];
                    }
                    trans *= 1.0 - a;
                }
                let px = img.pixel(x, y);
                for k in 0..3 {
                    assert_eq!(px[k], rgb[k], "pixel ({x},{y}) channel {k}");
                }
                assert_eq!(px[3], 1.0 - trans);
            }
        }
    }
}
