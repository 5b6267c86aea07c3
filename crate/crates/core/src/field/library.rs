//! Analytic reference fields and ready-made scenes.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64;

use super::{even_levels, DeformationField, FieldScene, ManifoldField, RadianceField, RadianceSample};
use crate::math::{exp, sin, sqrt, Aabb, Vec3};
use crate::rig::{flame_parents, FlameTemplate, VertexRigging};
use crate::{Error, Result};

/// Scenes accepted by [`by_name`] that produce a bakeable surface.
pub const SHIPPED_SCENES: [&str; 4] = ["sphere-shell", "ellipsoid", "bumpy", "head"];

/// Shape parameters shared by every library scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub n_levels: usize,
    pub level_lo: f64,
    pub level_hi: f64,
    pub n_bases: usize,
    pub feature_dim: usize,
    pub n_expr: usize,
    pub seed: u64,
    pub template_vertices: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_levels: crate::DEFAULT_LAYERS,
            level_lo: -0.2,
            level_hi: 0.0,
            n_bases: crate::DEFAULT_BASES,
            feature_dim: crate::DEFAULT_FEATURE_DIM,
            n_expr: crate::DEFAULT_EXPRESSIONS,
            seed: 0,
            template_vertices: 512,
        }
    }
}

impl SceneConfig {
    pub fn levels(&self) -> Vec<f64> {
        even_levels(self.n_levels, self.level_lo, self.level_hi)
    }

    fn descriptor(&self, name: &str) -> String {
        format!(
            "{name};levels={}:{}..{};bases={};feature={};expr={};seed={};template={}",
            self.n_levels,
            self.level_lo,
            self.level_hi,
            self.n_bases,
            self.feature_dim,
            self.n_expr,
            self.seed,
            self.template_vertices
        )
    }
}

fn uniform(rng: &mut Pcg64, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn random_unit(rng: &mut Pcg64) -> Vec3 {
    loop {
        let v = Vec3::new(
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
        );
        let l = v.length();
        if l > 0.1 && l <= 1.0 {
            return v * (1.0 / l);
        }
    }
}

// ---------------------------------------------------------------------------
// Manifolds

/// `|x − center| − radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSdf {
    pub center: Vec3,
    pub radius: f64,
}

impl SphereSdf {
    pub fn unit() -> Self {
        Self {
            center: Vec3::ZERO,
            radius: 1.0,
        }
    }
}

impl ManifoldField for SphereSdf {
    #[inline]
    fn eval(&self, x: Vec3) -> f64 {
        (x - self.center).length() - self.radius
    }
}

/// Near-distance ellipsoid field `k0(k0 − 1)/k1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidSdf {
    pub center: Vec3,
    pub radii: Vec3,
}

impl ManifoldField for EllipsoidSdf {
    #[inline]
    fn eval(&self, x: Vec3) -> f64 {
        let p = x - self.center;
        let r = self.radii;
        let k0 = Vec3::new(p.x / r.x, p.y / r.y, p.z / r.z).length();
        let k1 = Vec3::new(p.x / (r.x * r.x), p.y / (r.y * r.y), p.z / (r.z * r.z)).length();
        if k1 < 1e-12 {
            return -r.x.min(r.y).min(r.z);
        }
        k0 * (k0 - 1.0) / k1
    }
}

/// Unit sphere with a product-of-sines bump pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpySdf {
    pub amplitude: f64,
    pub frequency: f64,
}

impl ManifoldField for BumpySdf {
    #[inline]
    fn eval(&self, x: Vec3) -> f64 {
        let f = self.frequency;
        x.length() - 1.0 + self.amplitude * sin(f * x.x) * sin(f * x.y) * sin(f * x.z)
    }
}

/// Skull, face and neck blended with smooth unions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadSdf {
    skull: EllipsoidSdf,
    face: EllipsoidSdf,
    neck_radius: f64,
    neck_top: f64,
}

impl Default for HeadSdf {
    fn default() -> Self {
        Self {
            skull: EllipsoidSdf {
                center: Vec3::new(0.0, 0.12, -0.05),
                radii: Vec3::new(0.78, 0.9, 0.88),
            },
            face: EllipsoidSdf {
                center: Vec3::new(0.0, -0.22, 0.25),
                radii: Vec3::new(0.55, 0.6, 0.55),
            },
            neck_radius: 0.38,
            neck_top: -0.35,
        }
    }
}

fn smooth_min(a: f64, b: f64, k: f64) -> f64 {
    let h = (0.5 + 0.5 * (b - a) / k).clamp(0.0, 1.0);
    b + (a - b) * h - k * h * (1.0 - h)
}

impl ManifoldField for HeadSdf {
    fn eval(&self, x: Vec3) -> f64 {
        let head = smooth_min(self.skull.eval(x), self.face.eval(x), 0.2);
        let radial = sqrt(x.x * x.x + (x.z + 0.1) * (x.z + 0.1)) - self.neck_radius;
        let neck = radial.max(x.y - self.neck_top);
        smooth_min(head, neck, 0.25)
    }
}

/// Same value everywhere; never crosses a level unless equal to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantManifold(pub f64);

impl ManifoldField for ConstantManifold {
    fn eval(&self, _x: Vec3) -> f64 {
        self.0
    }
}

// ---------------------------------------------------------------------------
// Radiance

/// Identical bases at every point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantRadiance {
    pub colors: Vec<[f32; 3]>,
    pub occupancies: Vec<f32>,
    pub feature: Vec<f32>,
}

impl RadianceField for ConstantRadiance {
    fn n_bases(&self) -> usize {
        self.colors.len()
    }
    fn feature_dim(&self) -> usize {
        self.feature.len()
    }
    fn eval_into(&self, _x: Vec3, out: &mut RadianceSample) {
        out.colors.copy_from_slice(&self.colors);
        out.occupancies.copy_from_slice(&self.occupancies);
        out.feature.copy_from_slice(&self.feature);
    }
}

/// `f_p[k] = clamp(x_{k mod 3}·0.5 + 0.5)`; colors follow the same ramp and
/// occupancies are constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisGradient {
    pub n_bases: usize,
    pub feature_dim: usize,
    pub occupancy: f32,
}

impl AxisGradient {
    #[inline]
    pub fn ramp(x: Vec3, k: usize) -> f32 {
        (x[k % 3] * 0.5 + 0.5).clamp(0.0, 1.0) as f32
    }
}

impl RadianceField for AxisGradient {
    fn n_bases(&self) -> usize {
        self.n_bases
    }
    fn feature_dim(&self) -> usize {
        self.feature_dim
    }
    fn eval_into(&self, x: Vec3, out: &mut RadianceSample) {
        for (k, f) in out.feature.iter_mut().enumerate() {
            *f = Self::ramp(x, k);
        }
        for (i, c) in out.colors.iter_mut().enumerate() {
            *c = [Self::ramp(x, i), Self::ramp(x, i + 1), Self::ramp(x, i + 2)];
        }
        out.occupancies.fill(self.occupancy);
    }
}

/// Low-frequency seeded pattern: a handful of shared plane waves mixed into
/// every channel with random coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPattern {
    n_bases: usize,
    feature_dim: usize,
    waves: Vec<(Vec3, f64)>,
    /// `channels × waves`, each row normalized to unit L1 norm.
    mix: Vec<f64>,
}

/// Channel ranges of [`SmoothPattern`]: `center ± spread`.
const COLOR_RANGE: (f64, f64) = (0.5, 0.42);
const OCCUPANCY_RANGE: (f64, f64) = (0.4, 0.25);
const FEATURE_RANGE: (f64, f64) = (0.5, 0.45);

impl SmoothPattern {
    pub fn new(n_bases: usize, feature_dim: usize, seed: u64) -> Self {
        Self::with_frequency(n_bases, feature_dim, seed, 1.5, 4.0)
    }

    pub fn with_frequency(n_bases: usize, feature_dim: usize, seed: u64, f_lo: f64, f_hi: f64) -> Self {
        let mut rng = Pcg64::seed_from_u64(seed ^ 0x5eed_0f_c0105);
        let waves: Vec<(Vec3, f64)> = (0..7)
            .map(|_| {
                let dir = random_unit(&mut rng) * uniform(&mut rng, f_lo, f_hi);
                (dir, uniform(&mut rng, 0.0, core::f64::consts::TAU))
            })
            .collect();
        let channels = n_bases * 4 + feature_dim;
        let mut mix = Vec::with_capacity(channels * waves.len());
        for _ in 0..channels {
            let row: Vec<f64> = (0..waves.len()).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
            let norm: f64 = row.iter().map(|a| a.abs()).sum::<f64>().max(1e-9);
            mix.extend(row.iter().map(|a| a / norm));
        }
        Self {
            n_bases,
            feature_dim,
            waves,
            mix,
        }
    }
}

impl RadianceField for SmoothPattern {
    fn n_bases(&self) -> usize {
        self.n_bases
    }
    fn feature_dim(&self) -> usize {
        self.feature_dim
    }
    fn eval_into(&self, x: Vec3, out: &mut RadianceSample) {
        let nw = self.waves.len();
        let mut phi = [0.0f64; 8];
        for (p, (w, ph)) in phi.iter_mut().zip(&self.waves) {
            *p = sin(w.dot(x) + ph);
        }
        let value = |ch: usize, (center, spread): (f64, f64)| -> f32 {
            let row = &self.mix[ch * nw..(ch + 1) * nw];
            let s: f64 = row.iter().zip(&phi).map(|(a, p)| a * p).sum();
            (center + spread * s) as f32
        };
        let mut ch = 0;
        for c in out.colors.iter_mut() {
            for v in c.iter_mut() {
                *v = value(ch, COLOR_RANGE);
                ch += 1;
            }
        }
        for a in out.occupancies.iter_mut() {
            *a = value(ch, OCCUPANCY_RANGE);
            ch += 1;
        }
        for f in out.feature.iter_mut() {
            *f = value(ch, FEATURE_RANGE);
            ch += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Deformation

/// Joint targets for root, neck, jaw, left eye, right eye.
pub const JOINT_TARGETS: [[f64; 3]; 5] = [
    [0.0, -0.95, -0.1],
    [0.0, -0.55, -0.05],
    [0.0, -0.4, 0.3],
    [0.3, 0.22, 0.72],
    [-0.3, 0.22, 0.72],
];

/// Smooth seeded blendshapes plus Gaussian joint-kernel skinning weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothDeformation {
    n_expr: usize,
    n_pose: usize,
    /// `(direction·amplitude, frequency vector, phase)` per expression.
    expr: Vec<(Vec3, Vec3, f64)>,
    /// Same per `(pose joint, feature)` pair.
    pose: Vec<(Vec3, Vec3, f64)>,
    centers: Vec<Vec3>,
    sigmas: Vec<f64>,
}

impl SmoothDeformation {
    pub fn new(n_expr: usize, n_pose: usize, seed: u64) -> Self {
        let mut rng = Pcg64::seed_from_u64(seed ^ 0xdef0_4a71);
        let mode = |amp: f64, rng: &mut Pcg64| {
            let d = random_unit(rng) * amp;
            let f = random_unit(rng) * uniform(rng, 1.0, 3.0);
            (d, f, uniform(rng, 0.0, core::f64::consts::TAU))
        };
        let expr = (0..n_expr).map(|_| mode(0.02, &mut rng)).collect();
        let pose = (0..n_pose * 9).map(|_| mode(0.01, &mut rng)).collect();
        Self {
            n_expr,
            n_pose,
            expr,
            pose,
            centers: JOINT_TARGETS.iter().map(|t| Vec3::new(t[0], t[1], t[2])).collect(),
            sigmas: alloc::vec![0.9, 0.45, 0.35, 0.15, 0.15],
        }
    }
}

impl DeformationField for SmoothDeformation {
    fn n_expr(&self) -> usize {
        self.n_expr
    }
    fn n_pose(&self) -> usize {
        self.n_pose
    }
    fn n_joints(&self) -> usize {
        self.centers.len()
    }
    fn eval_into(&self, x: Vec3, expr: &mut [f32], pose: &mut [f32], weights: &mut [f32]) {
        for ((d, f, p), out) in self.expr.iter().zip(expr.chunks_exact_mut(3)) {
            let v = *d * sin(f.dot(x) + p);
            out.copy_from_slice(&v.to_f32());
        }
        for ((d, f, p), out) in self.pose.iter().zip(pose.chunks_exact_mut(3)) {
            let v = *d * sin(f.dot(x) + p);
            out.copy_from_slice(&v.to_f32());
        }
        let mut raw = [0.0f64; 16];
        let mut sum = 0.0;
        for (j, (c, s)) in self.centers.iter().zip(&self.sigmas).enumerate() {
            let r2 = (x - *c).length_squared();
            raw[j] = exp(-0.5 * r2 / (s * s)) + if j == 0 { 1e-3 } else { 0.0 };
            sum += raw[j];
        }
        for (w, r) in weights.iter_mut().zip(raw) {
            *w = (r / sum) as f32;
        }
    }
}

/// Same rigging at every point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDeformation {
    pub n_expr: usize,
    pub n_pose: usize,
    pub expr: Vec<f32>,
    pub pose: Vec<f32>,
    pub weights: Vec<f32>,
}

impl DeformationField for ConstantDeformation {
    fn n_expr(&self) -> usize {
        self.n_expr
    }
    fn n_pose(&self) -> usize {
        self.n_pose
    }
    fn n_joints(&self) -> usize {
        self.weights.len()
    }
    fn eval_into(&self, _x: Vec3, expr: &mut [f32], pose: &mut [f32], weights: &mut [f32]) {
        expr.copy_from_slice(&self.expr);
        pose.copy_from_slice(&self.pose);
        weights.copy_from_slice(&self.weights);
    }
}

/// Copies the rigging of the nearest anchor point (brute force).
#[derive(Debug, Clone, PartialEq)]
pub struct NearestTemplateVertex {
    pub points: Vec<Vec3>,
    pub rigging: VertexRigging,
}

impl NearestTemplateVertex {
    pub fn nearest(&self, x: Vec3) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = (*p - x).length_squared();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

impl DeformationField for NearestTemplateVertex {
    fn n_expr(&self) -> usize {
        self.rigging.n_expr
    }
    fn n_pose(&self) -> usize {
        self.rigging.n_pose
    }
    fn n_joints(&self) -> usize {
        self.rigging.n_joints
    }
    fn eval_into(&self, x: Vec3, expr: &mut [f32], pose: &mut [f32], weights: &mut [f32]) {
        let v = self.nearest(x);
        expr.copy_from_slice(self.rigging.expr_of(v));
        pose.copy_from_slice(self.rigging.pose_of(v));
        weights.copy_from_slice(self.rigging.weights_of(v));
    }
}

/// Evaluates a deformation field at each point.
pub fn sample_rigging(field: &dyn DeformationField, points: &[Vec3]) -> VertexRigging {
    let (ne, np, nj) = (field.n_expr(), field.n_pose(), field.n_joints());
    let mut rig = VertexRigging::zeros(0, ne, np, nj);
    let mut e = alloc::vec![0.0f32; ne * 3];
    let mut p = alloc::vec![0.0f32; np * 27];
    let mut w = alloc::vec![0.0f32; nj];
    for x in points {
        field.eval_into(*x, &mut e, &mut p, &mut w);
        rig.push(&e, &p, &w);
    }
    rig
}

// ---------------------------------------------------------------------------
// Template

/// Points on a sphere of radius `radius` by the golden-angle spiral.
pub fn fibonacci_sphere(n: usize, radius: f64) -> Vec<Vec3> {
    let golden = core::f64::consts::PI * (3.0 - sqrt(5.0));
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = sqrt((1.0 - y * y).max(0.0));
            let a = golden * i as f64;
            Vec3::new(r * crate::math::cos(a), y, r * sin(a)) * radius
        })
        .collect()
}

/// FLAME-like 5-joint template over a point sphere. Joint regressor rows
/// average the 8 template vertices nearest to each joint target; the
/// template expression basis is the deformation field sampled at the
/// template vertices.
pub fn synthetic_head_template(n_vertices: usize, deformation: &dyn DeformationField) -> FlameTemplate {
    let points = fibonacci_sphere(n_vertices.max(8), 0.95);
    let nv = points.len();
    let n_expr = deformation.n_expr();
    let rig = sample_rigging(deformation, &points);
    let mut joint_regressor = alloc::vec![0.0f32; JOINT_TARGETS.len() * nv];
    for (j, t) in JOINT_TARGETS.iter().enumerate() {
        let t = Vec3::new(t[0], t[1], t[2]);
        let mut order: Vec<usize> = (0..nv).collect();
        order.sort_by(|&a, &b| {
            (points[a] - t)
                .length_squared()
                .partial_cmp(&(points[b] - t).length_squared())
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &v in &order[..8] {
            joint_regressor[j * nv + v] = 0.125;
        }
    }
    FlameTemplate {
        vertices: points.iter().map(|p| p.to_f32()).collect(),
        expr_basis: rig.expr,
        n_expr,
        joint_regressor,
        parents: flame_parents(),
        corrective_joints: alloc::vec![1, 2, 3, 4],
        eye_joints: alloc::vec![3, 4],
        eye_correctives: true,
        appearance_joints: alloc::vec![2, 3, 4],
    }
}

// ---------------------------------------------------------------------------
// Scenes

/// Deformation field and template shared by every library scene. Lattice
/// dumps carry no rigging and borrow these.
pub fn default_rigging(cfg: &SceneConfig) -> (SmoothDeformation, FlameTemplate) {
    let deformation = SmoothDeformation::new(cfg.n_expr, crate::DEFAULT_POSE_JOINTS, cfg.seed);
    let template = synthetic_head_template(cfg.template_vertices, &deformation);
    (deformation, template)
}

fn assemble(
    name: &str,
    cfg: &SceneConfig,
    manifold: Box<dyn ManifoldField>,
    radiance: Box<dyn RadianceField>,
    bounds: Aabb,
) -> FieldScene {
    let (deformation, template) = default_rigging(cfg);
    FieldScene {
        name: name.into(),
        descriptor: cfg.descriptor(name),
        manifold,
        radiance,
        deformation: Box::new(deformation),
        template,
        levels: cfg.levels(),
        bounds,
    }
}

fn pattern(cfg: &SceneConfig) -> Box<dyn RadianceField> {
    Box::new(SmoothPattern::new(cfg.n_bases, cfg.feature_dim, cfg.seed))
}

/// Nested spheres of radius `1 + l_i`.
pub fn sphere_shell(cfg: &SceneConfig) -> FieldScene {
    assemble("sphere-shell", cfg, Box::new(SphereSdf::unit()), pattern(cfg), Aabb::cube(1.15))
}

pub fn ellipsoid(cfg: &SceneConfig) -> FieldScene {
    let sdf = EllipsoidSdf {
        center: Vec3::ZERO,
        radii: Vec3::new(0.85, 1.05, 0.95),
    };
    assemble("ellipsoid", cfg, Box::new(sdf), pattern(cfg), Aabb::cube(1.2))
}

pub fn bumpy(cfg: &SceneConfig) -> FieldScene {
    let sdf = BumpySdf {
        amplitude: 0.04,
        frequency: 5.0,
    };
    assemble("bumpy", cfg, Box::new(sdf), pattern(cfg), Aabb::cube(1.2))
}

/// Head-like blend; the neck is cut open by the bounding box.
pub fn head(cfg: &SceneConfig) -> FieldScene {
    let bounds = Aabb::new(Vec3::new(-1.05, -1.15, -1.1), Vec3::new(1.05, 1.15, 1.15));
    assemble("head", cfg, Box::new(HeadSdf::default()), pattern(cfg), bounds)
}

/// No level crossings at all.
pub fn constant_field(cfg: &SceneConfig) -> FieldScene {
    assemble("constant", cfg, Box::new(ConstantManifold(1.0)), pattern(cfg), Aabb::cube(1.15))
}

/// Sphere shells with identical color and occupancy in every basis.
pub fn constant_sphere(cfg: &SceneConfig, color: [f32; 3], occupancy: f32) -> FieldScene {
    let radiance = ConstantRadiance {
        colors: alloc::vec![color; cfg.n_bases],
        occupancies: alloc::vec![occupancy; cfg.n_bases],
        feature: alloc::vec![0.5; cfg.feature_dim],
    };
    let mut s = assemble("constant-sphere", cfg, Box::new(SphereSdf::unit()), Box::new(radiance), Aabb::cube(1.15));
    s.descriptor = format!("{};color={color:?};occupancy={occupancy}", s.descriptor);
    s
}

pub fn axis_gradient(cfg: &SceneConfig) -> FieldScene {
    let radiance = AxisGradient {
        n_bases: cfg.n_bases,
        feature_dim: cfg.feature_dim,
        occupancy: 0.5,
    };
    assemble("axis-gradient", cfg, Box::new(SphereSdf::unit()), Box::new(radiance), Aabb::cube(1.15))
}

/// Sphere shells with texel-scale radiance detail.
pub fn high_frequency(cfg: &SceneConfig) -> FieldScene {
    let radiance = SmoothPattern::with_frequency(cfg.n_bases, cfg.feature_dim, cfg.seed, 150.0, 250.0);
    assemble("high-frequency", cfg, Box::new(SphereSdf::unit()), Box::new(radiance), Aabb::cube(1.15))
}

/// Looks up a library scene by name.
pub fn by_name(name: &str, cfg: &SceneConfig) -> Result<FieldScene> {
    let scene = match name {
        "sphere-shell" => sphere_shell(cfg),
        "ellipsoid" => ellipsoid(cfg),
        "bumpy" => bumpy(cfg),
        "head" => head(cfg),
        "constant" => constant_field(cfg),
        "axis-gradient" => axis_gradient(cfg),
        "high-frequency" => high_frequency(cfg),
        _ => return Err(Error::Config(format!("unknown scene '{name}'"))),
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_sdf_values() {
        let s = SphereSdf::unit();
        assert_eq!(s.eval(Vec3::ZERO), -1.0);
        assert!(s.eval(Vec3::new(0.0, 1.0, 0.0)).abs() < 1e-15);
        assert!((s.eval(Vec3::new(0.0, 0.0, 0.8)) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_reduces_to_sphere() {
        let e = EllipsoidSdf {
            center: Vec3::ZERO,
            radii: Vec3::splat(1.0),
        };
        for p in [Vec3::new(0.3, -0.2, 0.5), Vec3::new(1.2, 0.0, 0.1)] {
            assert!((e.eval(p) - (p.length() - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn scenes_validate() {
        let cfg = SceneConfig::default();
        for name in SHIPPED_SCENES.iter().chain(&["constant", "axis-gradient", "high-frequency"]) {
            let s = by_name(name, &cfg).unwrap();
            assert_eq!(s.levels.len(), 8);
            assert_eq!(s.n_bases(), 16);
        }
        assert!(matches!(by_name("nope", &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn head_levels_are_closed_inside_bounds_except_neck() {
        let s = head(&SceneConfig::default());
        // Top of the head is inside the box for every level.
        assert!(s.manifold_eval(Vec3::new(0.0, 1.14, 0.0)) > 0.0);
        assert!(s.manifold_eval(Vec3::new(0.0, 0.0, 0.0)) < -0.2);
        // The neck reaches the bottom face.
        assert!(s.manifold_eval(Vec3::new(0.0, -1.15, -0.1)) < -0.2);
    }

    #[test]
    fn constant_radiance_ignores_position() {
        let s = constant_sphere(&SceneConfig::default(), [0.1, 0.2, 0.3], 0.7);
        let a = s.radiance_eval(Vec3::new(0.1, 0.5, -0.3));
        let b = s.radiance_eval(Vec3::new(-0.9, 0.0, 0.2));
        assert_eq!(a, b);
        assert_eq!(a.colors[5], [0.1, 0.2, 0.3]);
    }

    #[test]
    fn axis_gradient_formula() {
        let s = axis_gradient(&SceneConfig::default());
        let x = Vec3::new(0.4, -0.6, 2.5);
        let r = s.radiance_eval(x);
        assert_eq!(r.feature[0], 0.7);
        assert_eq!(r.feature[1], 0.2);
        assert_eq!(r.feature[2], 1.0);
        assert_eq!(r.feature[3], 0.7);
    }

    #[test]
    fn single_basis_scene() {
        let cfg = SceneConfig {
            n_bases: 1,
            ..SceneConfig::default()
        };
        let r = sphere_shell(&cfg).radiance_eval(Vec3::new(0.2, 0.1, 0.9));
        assert_eq!(r.colors.len(), 1);
        assert_eq!(r.occupancies.len(), 1);
    }

    #[test]
    fn pattern_stays_in_range() {
        let s = sphere_shell(&SceneConfig::default());
        let mut occ = (f32::MAX, f32::MIN);
        for i in 0..500 {
            let x = fibonacci_sphere(500, 0.9)[i];
            let r = s.radiance_eval(x);
            for a in &r.occupancies {
                occ = (occ.0.min(*a), occ.1.max(*a));
            }
            assert!(r.colors.iter().flatten().all(|c| (0.0..=1.0).contains(c)));
        }
        assert!(occ.0 >= 0.15 - 1e-6 && occ.1 <= 0.65 + 1e-6, "{occ:?}");
    }

    #[test]
    fn smooth_weights_partition_unity() {
        let d = SmoothDeformation::new(50, 4, 0);
        let mut e = alloc::vec![0.0; 150];
        let mut p = alloc::vec![0.0; 108];
        let mut w = alloc::vec![0.0; 5];
        for x in fibonacci_sphere(64, 1.0) {
            d.eval_into(x, &mut e, &mut p, &mut w);
            let s: f32 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn template_is_valid() {
        let d = SmoothDeformation::new(50, 4, 0);
        let t = synthetic_head_template(512, &d);
        t.validate().unwrap();
        assert_eq!(t.joint_count(), 5);
    }
}
