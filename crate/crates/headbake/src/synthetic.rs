//! Randomized bundles for roundtrip tests and storage estimates.

use headbake_core::asset::AvatarBundle;
use headbake_core::bake::TextureSet;
use headbake_core::decoder::{DecoderConfig, DecoderWeights};
use headbake_core::field::library::{default_rigging, SceneConfig};
use headbake_core::image::Image8;
use headbake_core::mesh::RiggedMesh;
use headbake_core::rig::VertexRigging;
use headbake_core::Vec3;
use rand::{Rng, RngCore, SeedableRng};
use rand_pcg::Pcg64;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_layers: usize,
    pub vertices: usize,
    /// Faces per layer; the last layer absorbs `total_faces` rounding when set.
    pub faces: usize,
    pub total_faces: Option<usize>,
    pub n_bases: usize,
    pub feature_dim: usize,
    pub n_expr: usize,
    pub texture_resolution: usize,
    /// Random texel bytes; zeros otherwise.
    pub random_texels: bool,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn small(n_layers: usize, seed: u64) -> Self {
        Self {
            n_layers,
            vertices: 12,
            faces: 10,
            total_faces: None,
            n_bases: 3,
            feature_dim: 5,
            n_expr: 4,
            texture_resolution: 8,
            random_texels: true,
            seed,
        }
    }

    /// Eight layers sharing 44,298 triangles with 1024² textures, 16 bases
    /// and an 8-channel position feature.
    pub fn full_scale() -> Self {
        let total = 44_298;
        Self {
            n_layers: 8,
            vertices: total / 8 / 2 + 200,
            faces: total / 8,
            total_faces: Some(total),
            n_bases: 16,
            feature_dim: 8,
            n_expr: 50,
            texture_resolution: 1024,
            random_texels: false,
            seed: 0,
        }
    }
}

fn unit(rng: &mut Pcg64) -> [f32; 3] {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if let Some(n) = v.try_normalize() {
            if v.length() > 0.1 {
                return n.to_f32();
            }
        }
    }
}

fn layer(spec: &SyntheticSpec, index: usize, faces: usize, n_pose: usize, n_joints: usize, rng: &mut Pcg64) -> RiggedMesh {
    let nv = spec.vertices.max(3);
    let positions = (0..nv).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let normals = (0..nv).map(|_| unit(rng)).collect();
    let uvs = (0..nv).map(|_| [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)]).collect();
    let triangles = (0..faces)
        .map(|_| [0; 3].map(|_: u32| rng.gen_range(0..nv as u32)))
        .collect();
    let mut rigging = VertexRigging::zeros(nv, spec.n_expr, n_pose, n_joints);
    rigging.expr.iter_mut().for_each(|x| *x = rng.gen_range(-0.01..0.01));
    rigging.pose.iter_mut().for_each(|x| *x = rng.gen_range(-0.01..0.01));
    for w in rigging.weights.chunks_exact_mut(n_joints) {
        w.iter_mut().for_each(|x| *x = rng.gen_range(0.0..1.0));
        let s: f32 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let s: f32 = w.iter().sum();
        w[0] += 1.0 - s;
    }
    RiggedMesh {
        positions,
        normals,
        uvs,
        triangles,
        rigging,
        level_index: index as u32,
        level: -0.2 + 0.2 * index as f64 / spec.n_layers.max(1) as f64 + rng.gen_range(0.0..1e-3),
    }
}

fn textures(spec: &SyntheticSpec, rng: &mut Pcg64) -> TextureSet {
    let r = spec.texture_resolution;
    let mut image = |channels: usize| {
        let mut data = vec![0u8; r * r * channels];
        if spec.random_texels {
            rng.fill_bytes(&mut data);
        }
        Image8::from_data(r, r, channels, data).unwrap()
    };
    TextureSet {
        resolution: r,
        radiance: (0..spec.n_bases).map(|_| image(4)).collect(),
        position: image(spec.feature_dim),
        stats: Default::default(),
    }
}

/// A valid bundle with random payloads.
pub fn synthetic_bundle(spec: &SyntheticSpec) -> AvatarBundle {
    let mut rng = Pcg64::seed_from_u64(spec.seed);
    let cfg = SceneConfig {
        n_bases: spec.n_bases,
        feature_dim: spec.feature_dim,
        n_expr: spec.n_expr,
        seed: spec.seed,
        template_vertices: 64,
        ..SceneConfig::default()
    };
    let (_, template) = default_rigging(&cfg);
    let decoder = DecoderWeights::random(
        &DecoderConfig {
            n_bases: spec.n_bases,
            feature_dim: spec.feature_dim,
            expr_dim: spec.n_expr,
            ..DecoderConfig::default()
        },
        spec.seed,
    );
    let (n_pose, n_joints) = (template.pose_count(), template.joint_count());
    let mut layers = Vec::with_capacity(spec.n_layers);
    let mut sets = Vec::with_capacity(spec.n_layers);
    for i in 0..spec.n_layers {
        let faces = match spec.total_faces {
            Some(t) if i + 1 == spec.n_layers => t - spec.faces * (spec.n_layers - 1),
            _ => spec.faces,
        };
        layers.push(layer(spec, i, faces, n_pose, n_joints, &mut rng));
        sets.push(textures(spec, &mut rng));
    }
    let provenance = format!("synthetic:{}", spec.seed);
    AvatarBundle::new("synthetic", &provenance, template, layers, &sets, decoder).expect("synthetic bundle is valid")
}

/// Shorthand used by unit tests.
pub fn tiny_bundle(n_layers: usize, seed: u64) -> AvatarBundle {
    synthetic_bundle(&SyntheticSpec::small(n_layers, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_counts() {
        let spec = SyntheticSpec {
            texture_resolution: 4,
            ..SyntheticSpec::full_scale()
        };
        let b = synthetic_bundle(&spec);
        assert_eq!(b.layers.len(), 8);
        assert_eq!(b.layers.iter().map(|l| l.face_count()).sum::<usize>(), 44_298);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(tiny_bundle(1, 1), tiny_bundle(1, 2));
        assert_eq!(tiny_bundle(1, 3), tiny_bundle(1, 3));
    }

    #[test]
    fn spread_picks_centered_layers() {
        let b = tiny_bundle(8, 4);
        let levels = |n: usize| b.spread(n).unwrap().manifest.levels;
        assert_eq!(levels(1), vec![b.manifest.levels[4]]);
        assert_eq!(levels(2), vec![b.manifest.levels[2], b.manifest.levels[6]]);
        assert_eq!(levels(4), [1, 3, 5, 7].map(|i| b.manifest.levels[i]).to_vec());
        assert_eq!(b.spread(8).unwrap(), b);
        assert!(b.spread(0).is_err() && b.spread(9).is_err());
        assert!(b.subset(&[3, 1]).is_err());
        assert_eq!(b.subset(&[0, 1, 2]).unwrap(), b.prefix(3).unwrap());
    }
}
