use std::sync::OnceLock;

use headbake_core::asset::AvatarBundle;
use headbake_core::bake::{bake_scene, BakeConfig};
use headbake_core::camera::Camera;
use headbake_core::decoder::{DecoderConfig, DecoderWeights};
use headbake_core::field::library::{self, SceneConfig};
use headbake_core::field::{oracle_render, OracleSettings};
use headbake_core::metrics::{max_abs_diff, mean_l1};
use headbake_core::raster::{RenderSettings, Renderer};
use headbake_core::rig::FramePose;
use headbake_core::{Mat3, Rigid, Vec3};

fn scene_cfg() -> SceneConfig {
    SceneConfig {
        n_levels: 3,
        n_bases: 4,
        feature_dim: 3,
        n_expr: 6,
        template_vertices: 128,
        ..SceneConfig::default()
    }
}

fn decoder() -> DecoderWeights {
    DecoderWeights::random(
        &DecoderConfig {
            n_bases: 4,
            feature_dim: 3,
            expr_dim: 6,
            ..DecoderConfig::default()
        },
        3,
    )
}

fn bundle() -> &'static AvatarBundle {
    static B: OnceLock<AvatarBundle> = OnceLock::new();
    B.get_or_init(|| {
        let scene = library::sphere_shell(&scene_cfg());
        let cfg = BakeConfig {
            grid_resolution: 64,
            target_faces: 3000,
            texture_resolution: 128,
            samples_per_texel: 4,
            ..BakeConfig::default()
        };
        let baked = bake_scene(&scene, &cfg).unwrap();
        AvatarBundle::new("sphere-shell", "test", scene.template.clone(), baked.layers, &baked.textures, decoder()).unwrap()
    })
}

fn rest(camera: Camera) -> FramePose {
    FramePose::rest(6, 5, camera)
}

#[test]
fn rest_pose_matches_reference_renderer() {
    let scene = library::sphere_shell(&scene_cfg());
    let r = Renderer::new(bundle()).unwrap();
    for yaw in [0.0, 40.0] {
        let pose = rest(Camera::orbit(yaw, 10.0, 9.0));
        let img = r.render(&pose, &RenderSettings::square(96)).unwrap();
        let oracle = oracle_render(&scene, &bundle().decoder, &pose, 96, 96, &OracleSettings::default()).unwrap();
        let l1 = mean_l1(&img, &oracle).unwrap();
        assert!(l1 <= 0.02, "yaw {yaw}: L1 {l1}");
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let mut pose = rest(Camera::orbit(20.0, -5.0, 9.0));
    pose.expression = vec![0.5, -0.3, 0.0, 0.2, 0.0, 0.1];
    pose.rotations[2] = Mat3::from_axis_angle(Vec3::X, 0.2);
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            Renderer::new(bundle())
                .unwrap()
                .render(&pose, &RenderSettings { tile_size: 16, ..RenderSettings::square(80) })
                .unwrap()
        })
    };
    let one = render(1);
    for t in [2, 3] {
        assert_eq!(render(t).data, one.data, "{t} threads");
    }
}

#[test]
fn global_rotation_equals_inverse_camera_rotation() {
    let r = Renderer::new(bundle()).unwrap();
    let camera = Camera::orbit(0.0, 0.0, 9.0);
    let rot = Mat3::from_axis_angle(Vec3::new(0.2, 1.0, 0.1), 0.5);
    let mut turned = rest(camera);
    turned.global = Rigid::new(rot, Vec3::ZERO);
    let mut moved_camera = camera;
    moved_camera.view = camera.view.compose(&Rigid::new(rot, Vec3::ZERO));
    let settings = RenderSettings::square(96);
    let a = r.render(&turned, &settings).unwrap();
    let b = r.render(&rest(moved_camera), &settings).unwrap();
    let l1 = mean_l1(&a, &b).unwrap();
    assert!(l1 <= 2e-3, "L1 {l1}, max {}", max_abs_diff(&a, &b).unwrap());
}

#[test]
fn background_is_transparent_and_center_is_covered() {
    let r = Renderer::new(bundle()).unwrap();
    let img = r.render(&rest(Camera::orbit(0.0, 0.0, 9.0)), &RenderSettings::square(64)).unwrap();
    assert_eq!(img.pixel(0, 0), &[0.0; 4]);
    assert!(img.pixel(32, 32)[3] > 0.5);
}
