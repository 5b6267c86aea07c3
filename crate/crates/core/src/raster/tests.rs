use super::*;
use crate::asset::dequantize;
use crate::bake::{bake_scene, BakeConfig, TextureSet};
use crate::decoder::{Activation, DecoderConfig, DecoderWeights, SpatialArch};
use crate::field::library::{self, SceneConfig};
use crate::image::Image8;
use crate::rig::VertexRigging;

fn uniform_weights(dp: usize, n_bases: usize) -> SpatialWeights {
    let arch = SpatialArch {
        sizes: alloc::vec![dp + 6, n_bases],
        activations: alloc::vec![Activation::Linear],
    };
    SpatialWeights::from_params(&arch, &alloc::vec![0.0; arch.param_count()]).unwrap()
}

fn flat_textures(r: usize, n_bases: usize, dp: usize, rgba: [u8; 4]) -> RenderTextures {
    let radiance = (0..n_bases)
        .map(|_| Image8::from_data(r, r, 4, rgba.repeat(r * r)).unwrap())
        .collect();
    RenderTextures::from_set(&TextureSet {
        resolution: r,
        radiance,
        position: Image8::new(r, r, dp),
        stats: Default::default(),
    })
    .unwrap()
}

/// Quad in the plane `z` spanning `[-s, s]²`, uv over `[0, 1]²`.
fn quad(s: f32, z: f32) -> (RiggedMesh, Deformed) {
    let positions = alloc::vec![[-s, -s, z], [s, -s, z], [s, s, z], [-s, s, z]];
    let normals = alloc::vec![[0.0, 0.0, 1.0]; 4];
    let mesh = RiggedMesh {
        positions: positions.clone(),
        normals: normals.clone(),
        uvs: alloc::vec![[0.0, 1.0], [1.0, 1.0], [1.0, 0.0], [0.0, 0.0]],
        triangles: alloc::vec![[0, 1, 2], [0, 2, 3]],
        rigging: VertexRigging::zeros(4, 0, 0, 1),
        level_index: 0,
        level: 0.0,
    };
    (mesh, Deformed { positions, normals })
}

#[test]
fn hand_computed_projection() {
    let cam = Camera::default();
    let (w, h) = (200usize, 100usize);
    let p = [[0.0f32, 0.0, 0.0], [0.5, 0.0, 1.0], [0.0, -0.25, -2.0]];
    let proj = project_vertices(&cam, &p, w, h);
    let t = crate::math::tan(7.0 * crate::math::DEG);
    for (q, r) in p.iter().zip(&proj) {
        let depth = 9.0 - q[2] as f64;
        let sx = (q[0] as f64 / (depth * t * 2.0) + 1.0) * 0.5 * w as f64;
        let sy = (1.0 - q[1] as f64 / (depth * t)) * 0.5 * h as f64;
        assert!((r.screen[0] - sx).abs() < 1e-4 && (r.screen[1] - sy).abs() < 1e-4);
        assert!((r.w - depth).abs() < 1e-9);
    }
    assert!((proj[0].screen[0] - 100.0).abs() < 1e-9 && (proj[0].screen[1] - 50.0).abs() < 1e-9);
}

#[test]
fn behind_camera_triangles_are_dropped() {
    let cam = Camera::default();
    let proj = project_vertices(&cam, &[[0.0, 0.0, 10.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], 64, 64);
    assert!(!proj[0].in_front);
    let tris = setup_triangles(&[[0, 1, 2]], &proj, &RenderSettings::square(64));
    assert!(tris.is_empty());
}

#[test]
fn constant_quad_single_basis() {
    let (mesh, def) = quad(3.0, 0.0);
    let tex = flat_textures(8, 1, 2, [200, 100, 50, 255]);
    let img = rasterize_layer(&mesh, &def, &tex, &uniform_weights(2, 1), &Camera::default(), &RenderSettings::square(48)).unwrap();
    for px in img.data.chunks_exact(4) {
        for (v, want) in px.iter().zip([200u8, 100, 50, 255]) {
            assert!((*v as f64 - dequantize(want)).abs() <= 1.0 / 255.0);
        }
    }
}

fn close(a: &[f32], b: [f32; 4]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-5)
}

#[test]
fn nearer_opaque_triangle_wins() {
    let (mut mesh, mut def) = quad(0.6, 0.0);
    // Second quad nearer to the camera, shifted right.
    let near: Vec<[f32; 3]> = def.positions.iter().map(|p| [p[0] + 0.3, p[1], 1.0]).collect();
    def.positions.extend(near.iter().copied());
    def.normals.extend([[0.0, 0.0, 1.0]; 4]);
    mesh.positions = def.positions.clone();
    mesh.normals = def.normals.clone();
    // Far quad samples the left half of the texture, near quad the right half.
    mesh.uvs = alloc::vec![[0.1, 0.5]; 4];
    mesh.uvs.extend([[0.9, 0.5]; 4]);
    mesh.triangles.extend([[4, 5, 6], [4, 6, 7]]);
    mesh.rigging = VertexRigging::zeros(8, 0, 0, 1);
    let r = 8;
    let mut img = Image8::new(r, r, 4);
    for y in 0..r {
        for x in 0..r {
            let v = if x < r / 2 { [255, 0, 0, 255] } else { [0, 0, 255, 255] };
            img.pixel_mut(x, y).copy_from_slice(&v);
        }
    }
    let tex = RenderTextures::from_set(&TextureSet {
        resolution: r,
        radiance: alloc::vec![img],
        position: Image8::new(r, r, 1),
        stats: Default::default(),
    })
    .unwrap();
    let settings = RenderSettings::square(64);
    let cam = Camera::default();
    let out = rasterize_layer(&mesh, &def, &tex, &uniform_weights(1, 1), &cam, &settings).unwrap();
    let proj_near = project_vertices(&cam, &near, 64, 64);
    let proj_far = project_vertices(&cam, &def.positions[..4], 64, 64);
    let inside = |p: &[Projected], x: f64, y: f64, m: f64| {
        let xs: Vec<f64> = p.iter().map(|q| q.screen[0]).collect();
        let ys: Vec<f64> = p.iter().map(|q| q.screen[1]).collect();
        let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        x > lo(&xs) + m && x < hi(&xs) - m && y > lo(&ys) + m && y < hi(&ys) - m
    };
    let (mut near_px, mut far_px) = (0, 0);
    for y in 0..64 {
        for x in 0..64 {
            let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
            let px = &out.data[(y * 64 + x) * 4..(y * 64 + x) * 4 + 4];
            if inside(&proj_near, cx, cy, 0.5) {
                assert!(close(px, [0.0, 0.0, 1.0, 1.0]), "{x},{y}: {px:?}");
                near_px += 1;
            } else if inside(&proj_far, cx, cy, 0.5) && !inside(&proj_near, cx, cy, -0.5) {
                assert!(close(px, [1.0, 0.0, 0.0, 1.0]), "{x},{y}: {px:?}");
                far_px += 1;
            }
        }
    }
    assert!(near_px > 50 && far_px > 20);
}

#[test]
fn checkerboard_matches_point_sampler() {
    let (mesh, def) = quad(0.8, 0.0);
    let r = 8;
    let mut img = Image8::new(r, r, 4);
    for y in 0..r {
        for x in 0..r {
            let v = if (x + y) % 2 == 0 { 230 } else { 20 };
            img.pixel_mut(x, y).copy_from_slice(&[v, v, v, 255]);
        }
    }
    let set = TextureSet {
        resolution: r,
        radiance: alloc::vec![img.clone()],
        position: Image8::new(r, r, 1),
        stats: Default::default(),
    };
    let tex = RenderTextures::from_set(&set).unwrap();
    let cam = Camera::default();
    let settings = RenderSettings::square(96);
    let out = rasterize_layer(&mesh, &def, &tex, &uniform_weights(1, 1), &cam, &settings).unwrap();
    // Oracle: intersect the pixel ray with the plane, map to uv, sample
    // bilinearly from texel centers.
    let mut checked = 0;
    for y in 0..96 {
        for x in 0..96 {
            let (o, d) = cam.pixel_ray(x, y, 96, 96);
            let t = -o.z / d.z;
            let p = o + d * t;
            if p.x.abs() > 0.79 || p.y.abs() > 0.79 {
                continue;
            }
            let u = (p.x + 0.8) / 1.6;
            let v = 1.0 - (p.y + 0.8) / 1.6;
            let fx = u * r as f64 - 0.5;
            let fy = v * r as f64 - 0.5;
            let (x0, y0) = (crate::math::floor(fx), crate::math::floor(fy));
            let at = |i: f64, j: f64| {
                let i = (i as i64).clamp(0, r as i64 - 1) as usize;
                let j = (j as i64).clamp(0, r as i64 - 1) as usize;
                img.pixel(i, j)[0] as f64 / 255.0
            };
            let (ax, ay) = (fx - x0, fy - y0);
            let want = at(x0, y0) * (1.0 - ax) * (1.0 - ay)
                + at(x0 + 1.0, y0) * ax * (1.0 - ay)
                + at(x0, y0 + 1.0) * (1.0 - ax) * ay
                + at(x0 + 1.0, y0 + 1.0) * ax * ay;
            let got = out.data[(y * 96 + x) * 4] as f64;
            // Vertex snapping moves uvs by at most 1/16 px worth of texels.
            let slope = 210.0 / 255.0 * r as f64 / 1.6 * (2.0 * 9.0 * crate::math::tan(7.0 * crate::math::DEG) / 96.0);
            assert!((got - want).abs() <= slope / 16.0 * 2.0 + 1e-3, "{x},{y}: {got} vs {want}");
            checked += 1;
        }
    }
    assert!(checked > 2000);
}

#[test]
fn composite_examples() {
    let one = |px: [f32; 4]| ImageF::from_data(1, 1, 4, px.to_vec()).unwrap();
    let opaque = one([0.2, 0.3, 0.4, 1.0]);
    assert_eq!(composite_layers(&[one([0.9, 0.9, 0.9, 0.5]), opaque.clone()]).unwrap(), opaque);
    let (cf, cb) = ([1.0f32, 0.0, 0.5], [0.0f32, 1.0, 0.5]);
    let back = one([cb[0] * 0.5, cb[1] * 0.5, cb[2] * 0.5, 0.5]);
    let front = one([cf[0] * 0.5, cf[1] * 0.5, cf[2] * 0.5, 0.5]);
    let out = composite_layers(&[back, front]).unwrap();
    assert!((out.data[3] - 0.75).abs() < 1e-7);
    for k in 0..3 {
        assert!((out.data[k] - (0.5 * cf[k] + 0.25 * cb[k])).abs() < 1e-7);
    }
    assert!(composite_layers(&[one([0.0; 4]), ImageF::new(2, 1, 4)]).is_err());
}

fn tiny_bundle(n_levels: usize) -> AvatarBundle {
    let cfg = SceneConfig {
        n_levels,
        n_bases: 4,
        feature_dim: 2,
        ..SceneConfig::default()
    };
    let scene = library::sphere_shell(&cfg);
    let bake = BakeConfig {
        grid_resolution: 32,
        target_faces: 600,
        texture_resolution: 64,
        samples_per_texel: 1,
        ..BakeConfig::default()
    };
    let baked = bake_scene(&scene, &bake).unwrap();
    let dec = DecoderWeights::random(
        &DecoderConfig {
            n_bases: 4,
            feature_dim: 2,
            ..DecoderConfig::default()
        },
        1,
    );
    AvatarBundle::new("sphere-shell", "test", scene.template.clone(), baked.layers, &baked.textures, dec).unwrap()
}

#[test]
fn fused_frame_equals_composited_layers() {
    let bundle = tiny_bundle(3);
    let r = Renderer::new(&bundle).unwrap();
    let pose = FramePose::rest(bundle.template.n_expr, bundle.template.joint_count(), Camera::orbit(20.0, 10.0, 9.0));
    let settings = RenderSettings::square(64);
    let fused = r.render(&pose, &settings).unwrap();
    let state = r.prepare(&pose).unwrap();
    let deformed = r.deform(&state.rig).unwrap();
    let layers: Vec<ImageF> = (0..3)
        .map(|i| r.rasterize_layer(i, &deformed[i], &state, &pose.camera, &settings).unwrap())
        .collect();
    let composed = composite_layers(&layers).unwrap();
    assert_eq!(fused.data, composed.data);
    assert!(fused.data.chunks_exact(4).any(|p| p[3] > 0.5));
    // Tile size does not change the image.
    let odd = r.render(&pose, &RenderSettings { tile_size: 7, ..settings }).unwrap();
    assert_eq!(fused.data, odd.data);
}

#[test]
fn zero_occupancy_is_transparent() {
    let mut bundle = tiny_bundle(2);
    for a in bundle.atlases.iter_mut() {
        let mut tex = a.to_textures().unwrap();
        for img in tex.radiance.iter_mut() {
            for px in img.data.chunks_exact_mut(4) {
                px[3] = 0;
            }
        }
        *a = crate::asset::LayerAtlas::from_textures(&tex).unwrap();
    }
    let pose = FramePose::rest(bundle.template.n_expr, bundle.template.joint_count(), Camera::default());
    let img = render_frame(&bundle, &pose, &RenderSettings::square(32)).unwrap();
    assert!(img.data.iter().all(|&v| v == 0.0));
}

#[test]
fn mismatched_decoder_is_rejected() {
    let (mesh, def) = quad(1.0, 0.0);
    let tex = flat_textures(4, 2, 2, [1, 2, 3, 4]);
    let err = rasterize_layer(&mesh, &def, &tex, &uniform_weights(2, 3), &Camera::default(), &RenderSettings::square(8));
    assert!(err.is_err());
}
