//! Tile-parallel software rasterizer for layered avatars.
//!
//! Each layer is drawn in two passes per tile: the first keeps the nearest
//! fragment depth, the second shades the first triangle (in index order)
//! whose depth is within `depth_epsilon` of it. Layers are composited inner
//! to outer with the premultiplied "over" operator. Screen coordinates are
//! y-down with pixel centers at `+0.5`; vertices snap to 1/16 pixel.

mod textures;

use alloc::vec::Vec;

pub use textures::RenderTextures;

use crate::asset::AvatarBundle;
use crate::camera::{Camera, Projected};
use crate::decoder::{global_eval, SpatialWeights, MAX_SPATIAL_WIDTH};
use crate::image::ImageF;
use crate::math::{round, sqrtf, Vec3};
use crate::mesh::RiggedMesh;
use crate::rig::{deform_with, Deformed, FramePose, FrameRig};
use crate::{par, Error, Result};

/// Sub-pixel steps per pixel.
pub const SUBPIXEL: i64 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    pub tile_size: usize,
    pub depth_epsilon: f32,
    pub backface_culling: bool,
    /// Overrides the pose camera's field of view.
    pub fov_y_deg: Option<f64>,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            tile_size: 32,
            depth_epsilon: 1e-5,
            backface_culling: false,
            fov_y_deg: None,
        }
    }
}

impl RenderSettings {
    pub fn square(size: usize) -> Self {
        Self {
            width: size,
            height: size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.tile_size == 0 {
            return Err(Error::Config("render size and tile size must be positive".into()));
        }
        Ok(())
    }

    pub fn camera(&self, camera: &Camera) -> Camera {
        let mut c = *camera;
        if let Some(f) = self.fov_y_deg {
            c.fov_y_deg = f;
        }
        c
    }

    fn tiles(&self) -> (usize, usize) {
        (self.width.div_ceil(self.tile_size), self.height.div_ceil(self.tile_size))
    }
}

/// Float color and depth targets. Depth holds normalized depth with the far
/// plane at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    pub width: usize,
    pub height: usize,
    pub color: Vec<f32>,
    pub depth: Vec<f32>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            color: alloc::vec![0.0; width * height * 4],
            depth: alloc::vec![1.0; width * height],
        }
    }

    pub fn into_image(self) -> ImageF {
        ImageF {
            width: self.width,
            height: self.height,
            channels: 4,
            data: self.color,
        }
    }
}

/// Projects world-space points.
pub fn project_vertices(camera: &Camera, positions: &[[f32; 3]], width: usize, height: usize) -> Vec<Projected> {
    positions
        .iter()
        .map(|p| camera.project(Vec3::from_f32(*p), width, height))
        .collect()
}

/// Back-to-front "over" of premultiplied layers listed inner to outer:
/// `out = layer + (1 − α_layer)·out`.
pub fn composite_layers(layers: &[ImageF]) -> Result<ImageF> {
    let first = layers.first().ok_or_else(|| Error::invalid("composite", "no layers"))?;
    let mut out = ImageF::new(first.width, first.height, 4);
    for l in layers {
        if !l.same_shape(&out) {
            return Err(Error::invalid("composite", "layer images differ in shape"));
        }
        composite_over(&mut out.data, &l.data);
    }
    Ok(out)
}

#[inline]
fn composite_over(out: &mut [f32], layer: &[f32]) {
    for (o, l) in out.chunks_exact_mut(4).zip(layer.chunks_exact(4)) {
        let t = 1.0 - l[3];
        for k in 0..4 {
            o[k] = l[k] + t * o[k];
        }
    }
}

/// Triangle after projection and snapping, counter-clockwise in the edge
/// function's sense.
#[derive(Debug, Clone, Copy)]
struct SetupTri {
    p: [[i64; 2]; 3],
    /// Source corners in the order of `p`.
    corners: [u32; 3],
    area2: i64,
    depth: [f32; 3],
    inv_w: [f32; 3],
    /// Inclusive pixel bounds `[x0, y0, x1, y1]`.
    bounds: [usize; 4],
}

#[inline]
fn edge(a: [i64; 2], b: [i64; 2], q: [i64; 2]) -> i64 {
    (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
}

#[inline]
fn top_left(a: [i64; 2], b: [i64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    (dy == 0 && dx > 0) || dy < 0
}

impl SetupTri {
    #[inline]
    fn depth_at(&self, e: [i64; 3]) -> f32 {
        let inv = 1.0 / self.area2 as f32;
        (e[0] as f32 * self.depth[0] + e[1] as f32 * self.depth[1] + e[2] as f32 * self.depth[2]) * inv
    }

    /// Perspective-correct barycentrics in `p` order.
    #[inline]
    fn perspective(&self, e: [i64; 3]) -> [f32; 3] {
        let b = [
            e[0] as f32 * self.inv_w[0],
            e[1] as f32 * self.inv_w[1],
            e[2] as f32 * self.inv_w[2],
        ];
        let s = 1.0 / (b[0] + b[1] + b[2]);
        [b[0] * s, b[1] * s, b[2] * s]
    }
}

fn snap(v: f64) -> i64 {
    round(v * SUBPIXEL as f64) as i64
}

/// First pixel whose center is at or after sub-pixel coordinate `v`.
fn first_pixel(v: i64) -> i64 {
    (v - SUBPIXEL / 2 + SUBPIXEL - 1).div_euclid(SUBPIXEL)
}

fn last_pixel(v: i64) -> i64 {
    (v - SUBPIXEL / 2).div_euclid(SUBPIXEL)
}

fn setup_triangles(triangles: &[[u32; 3]], proj: &[Projected], settings: &RenderSettings) -> Vec<SetupTri> {
    let (w, h) = (settings.width as i64, settings.height as i64);
    let mut out = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let v = tri.map(|i| &proj[i as usize]);
        if v.iter().any(|p| !p.in_front) {
            continue;
        }
        let mut p = v.map(|q| [snap(q.screen[0]), snap(q.screen[1])]);
        let mut corners = *tri;
        let mut area2 = edge(p[0], p[1], p[2]);
        if area2 == 0 {
            continue;
        }
        // Counter-clockwise on screen (y up) gives a negative edge area here.
        if settings.backface_culling && area2 > 0 {
            continue;
        }
        if area2 < 0 {
            p.swap(1, 2);
            corners.swap(1, 2);
            area2 = -area2;
        }
        let lo = |a: usize| p.iter().map(|q| q[a]).min().unwrap();
        let hi = |a: usize| p.iter().map(|q| q[a]).max().unwrap();
        let x0 = first_pixel(lo(0)).max(0);
        let y0 = first_pixel(lo(1)).max(0);
        let x1 = last_pixel(hi(0)).min(w - 1);
        let y1 = last_pixel(hi(1)).min(h - 1);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let pr = corners.map(|i| &proj[i as usize]);
        out.push(SetupTri {
            p,
            corners,
            area2,
            depth: pr.map(|q| q.depth as f32),
            inv_w: pr.map(|q| (1.0 / q.w) as f32),
            bounds: [x0 as usize, y0 as usize, x1 as usize, y1 as usize],
        });
    }
    out
}

/// A layer ready for rasterization in one frame.
struct LayerFrame<'a> {
    tris: Vec<SetupTri>,
    /// Triangle indices per tile, in triangle order.
    bins: Vec<Vec<u32>>,
    uvs: &'a [[f32; 2]],
    /// Camera-space vertex normals.
    normals: Vec<[f32; 3]>,
    textures: &'a RenderTextures,
}

impl<'a> LayerFrame<'a> {
    fn new(
        mesh: &'a RiggedMesh,
        deformed: &Deformed,
        textures: &'a RenderTextures,
        camera: &Camera,
        settings: &RenderSettings,
    ) -> Self {
        let proj = project_vertices(camera, &deformed.positions, settings.width, settings.height);
        let tris = setup_triangles(&mesh.triangles, &proj, settings);
        let (tx, ty) = settings.tiles();
        let ts = settings.tile_size;
        let mut bins: Vec<Vec<u32>> = alloc::vec![Vec::new(); tx * ty];
        for (i, t) in tris.iter().enumerate() {
            let [x0, y0, x1, y1] = t.bounds;
            for by in y0 / ts..=y1 / ts {
                for bx in x0 / ts..=x1 / ts {
                    bins[by * tx + bx].push(i as u32);
                }
            }
        }
        let normals = deformed
            .normals
            .iter()
            .map(|n| camera.view.apply_vector(Vec3::from_f32(*n)).normalize().to_f32())
            .collect();
        Self {
            tris,
            bins,
            uvs: &mesh.uvs,
            normals,
            textures,
        }
    }
}

/// Rectangle of pixels `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy)]
struct TileRect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl TileRect {
    fn of(index: usize, settings: &RenderSettings) -> Self {
        let (tx, _) = settings.tiles();
        let ts = settings.tile_size;
        let (bx, by) = (index % tx, index / tx);
        Self {
            x0: bx * ts,
            y0: by * ts,
            x1: ((bx + 1) * ts).min(settings.width),
            y1: ((by + 1) * ts).min(settings.height),
        }
    }

    fn width(&self) -> usize {
        self.x1 - self.x0
    }

    fn len(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Per-tile scratch memory.
struct TileScratch {
    depth: Vec<f32>,
    owner: Vec<u32>,
    edges: Vec<[i64; 3]>,
    texel: Vec<f32>,
    input: Vec<f32>,
    weights: Vec<f32>,
}

impl TileScratch {
    fn new(tile_pixels: usize, textures_stride: usize, n_bases: usize) -> Self {
        Self {
            depth: alloc::vec![1.0; tile_pixels],
            owner: alloc::vec![u32::MAX; tile_pixels],
            edges: alloc::vec![[0; 3]; tile_pixels],
            texel: alloc::vec![0.0; textures_stride],
            input: alloc::vec![0.0; MAX_SPATIAL_WIDTH],
            weights: alloc::vec![0.0; n_bases],
        }
    }
}

struct ShadeContext<'a> {
    sw: &'a SpatialWeights,
    ray: PixelRays,
    settings: &'a RenderSettings,
}

/// Camera-space view directions through pixel centers.
#[derive(Debug, Clone, Copy)]
struct PixelRays {
    kx: f32,
    bx: f32,
    ky: f32,
    by: f32,
}

impl PixelRays {
    fn new(camera: &Camera, settings: &RenderSettings) -> Self {
        let t = camera.tan_half_fov();
        let (w, h) = (settings.width as f64, settings.height as f64);
        let ta = t * w / h;
        Self {
            kx: (2.0 * ta / w) as f32,
            bx: (ta * (1.0 / w - 1.0)) as f32,
            ky: (-2.0 * t / h) as f32,
            by: (t * (1.0 - 1.0 / h)) as f32,
        }
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> [f32; 3] {
        let d = [self.kx * x as f32 + self.bx, self.ky * y as f32 + self.by, -1.0];
        let inv = 1.0 / sqrtf(d[0] * d[0] + d[1] * d[1] + 1.0);
        [d[0] * inv, d[1] * inv, -inv]
    }
}

/// Draws one layer into a tile-local premultiplied RGBA buffer.
fn rasterize_tile(layer: &LayerFrame, tile_index: usize, rect: TileRect, ctx: &ShadeContext, scratch: &mut TileScratch, out: &mut [f32]) {
    #[cfg(all(feature = "std", target_arch = "x86_64"))]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports the enabled features.
        unsafe { rasterize_tile_avx2(layer, tile_index, rect, ctx, scratch, out) };
        return;
    }
    rasterize_tile_impl(layer, tile_index, rect, ctx, scratch, out);
}

/// Wider vectors only; no fused multiply-add, so results match the baseline
/// build bit for bit.
#[cfg(all(feature = "std", target_arch = "x86_64"))]
#[target_feature(enable = "avx2")]
unsafe fn rasterize_tile_avx2(layer: &LayerFrame, tile_index: usize, rect: TileRect, ctx: &ShadeContext, scratch: &mut TileScratch, out: &mut [f32]) {
    rasterize_tile_impl(layer, tile_index, rect, ctx, scratch, out);
}

#[inline(always)]
fn rasterize_tile_impl(layer: &LayerFrame, tile_index: usize, rect: TileRect, ctx: &ShadeContext, scratch: &mut TileScratch, out: &mut [f32]) {
    let n = rect.len();
    let tw = rect.width();
    scratch.depth[..n].fill(1.0);
    scratch.owner[..n].fill(u32::MAX);
    out[..n * 4].fill(0.0);
    let bin = &layer.bins[tile_index];
    if bin.is_empty() {
        return;
    }
    // Pass 1: nearest depth.
    for &ti in bin {
        let t = &layer.tris[ti as usize];
        for_each_covered(t, rect, |x, y, e| {
            let d = t.depth_at(e);
            let k = (y - rect.y0) * tw + (x - rect.x0);
            if d < scratch.depth[k] {
                scratch.depth[k] = d;
            }
        });
    }
    // Pass 2: first triangle within epsilon of the nearest depth.
    let eps = ctx.settings.depth_epsilon;
    for &ti in bin {
        let t = &layer.tris[ti as usize];
        for_each_covered(t, rect, |x, y, e| {
            let k = (y - rect.y0) * tw + (x - rect.x0);
            if scratch.owner[k] == u32::MAX && t.depth_at(e) <= scratch.depth[k] + eps {
                scratch.owner[k] = ti;
                scratch.edges[k] = e;
            }
        });
    }
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let k = (y - rect.y0) * tw + (x - rect.x0);
            let ti = scratch.owner[k];
            if ti == u32::MAX {
                continue;
            }
            let px = shade(layer, &layer.tris[ti as usize], scratch.edges[k], x, y, ctx, scratch);
            out[k * 4..k * 4 + 4].copy_from_slice(&px);
        }
    }
}

#[inline(always)]
fn for_each_covered(t: &SetupTri, rect: TileRect, mut f: impl FnMut(usize, usize, [i64; 3])) {
    let [bx0, by0, bx1, by1] = t.bounds;
    let (x0, x1) = (bx0.max(rect.x0), bx1.min(rect.x1 - 1));
    let (y0, y1) = (by0.max(rect.y0), by1.min(rect.y1 - 1));
    if x0 > x1 || y0 > y1 {
        return;
    }
    let q0 = [x0 as i64 * SUBPIXEL + SUBPIXEL / 2, y0 as i64 * SUBPIXEL + SUBPIXEL / 2];
    let mut row = [0i64; 3];
    let mut dx = [0i64; 3];
    let mut dy = [0i64; 3];
    let mut bias = [0i64; 3];
    for k in 0..3 {
        let a = t.p[(k + 1) % 3];
        let b = t.p[(k + 2) % 3];
        row[k] = edge(a, b, q0);
        dx[k] = -(b[1] - a[1]) * SUBPIXEL;
        dy[k] = (b[0] - a[0]) * SUBPIXEL;
        bias[k] = i64::from(!top_left(a, b));
    }
    for y in y0..=y1 {
        let mut e = row;
        for x in x0..=x1 {
            if e[0] >= bias[0] && e[1] >= bias[1] && e[2] >= bias[2] {
                f(x, y, e);
            }
            e = [e[0] + dx[0], e[1] + dx[1], e[2] + dx[2]];
        }
        row = [row[0] + dy[0], row[1] + dy[1], row[2] + dy[2]];
    }
}

#[inline(always)]
fn shade(layer: &LayerFrame, t: &SetupTri, e: [i64; 3], x: usize, y: usize, ctx: &ShadeContext, s: &mut TileScratch) -> [f32; 4] {
    let b = t.perspective(e);
    let mut uv = [0.0f32; 2];
    let mut n = [0.0f32; 3];
    for k in 0..3 {
        let v = t.corners[k] as usize;
        let tuv = layer.uvs[v];
        uv[0] += b[k] * tuv[0];
        uv[1] += b[k] * tuv[1];
        let tn = layer.normals[v];
        n[0] += b[k] * tn[0];
        n[1] += b[k] * tn[1];
        n[2] += b[k] * tn[2];
    }
    let len = sqrtf(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    if len > 0.0 {
        for c in n.iter_mut() {
            *c /= len;
        }
    }
    let tex = layer.textures;
    tex.sample_bilinear(uv, &mut s.texel);
    let dp = tex.feature_dim;
    let view = ctx.ray.at(x, y);
    let input = &mut s.input[..dp + 6];
    input[..dp].copy_from_slice(&s.texel[..dp]);
    input[dp..dp + 3].copy_from_slice(&view);
    input[dp + 3..dp + 6].copy_from_slice(&n);
    ctx.sw.weights_into_fast(input, &mut s.weights);
    let mut c = [0.0f32; 3];
    let mut a = 0.0f32;
    for (w, g) in s.weights.iter().zip(s.texel[dp..].chunks_exact(4)) {
        c[0] += w * g[0];
        c[1] += w * g[1];
        c[2] += w * g[2];
        a += w * g[3];
    }
    [c[0] * a, c[1] * a, c[2] * a, a]
}

/// Runs `f(tile_index, rect, tile_buffer)` over all tiles in parallel and
/// assembles the tile buffers in a fixed order.
fn render_tiles<F>(settings: &RenderSettings, f: F) -> ImageF
where
    F: Fn(usize, TileRect, &mut [f32]) + Sync + Send,
{
    let (tx, ty) = settings.tiles();
    let ts = settings.tile_size;
    let tiles = par::map_range(tx * ty, |i| {
        let rect = TileRect::of(i, settings);
        let mut buf = alloc::vec![0.0f32; ts * ts * 4];
        f(i, rect, &mut buf);
        buf
    });
    let mut img = ImageF::new(settings.width, settings.height, 4);
    for (i, buf) in tiles.iter().enumerate() {
        let rect = TileRect::of(i, settings);
        let tw = rect.width();
        for y in rect.y0..rect.y1 {
            let src = &buf[(y - rect.y0) * tw * 4..(y - rect.y0 + 1) * tw * 4];
            let dst = (y * settings.width + rect.x0) * 4;
            img.data[dst..dst + tw * 4].copy_from_slice(src);
        }
    }
    img
}

fn check_layer(mesh: &RiggedMesh, deformed: &Deformed, textures: &RenderTextures, sw: &SpatialWeights) -> Result<()> {
    Error::check_len("deformed positions", mesh.vertex_count(), deformed.positions.len())?;
    Error::check_len("deformed normals", mesh.vertex_count(), deformed.normals.len())?;
    Error::check_len("uvs", mesh.vertex_count(), mesh.uvs.len())?;
    Error::check_len("spatial input", textures.feature_dim + 6, sw.input_dim())?;
    Error::check_len("radiance bases", textures.n_bases, sw.output_dim())?;
    Error::check_len("texture data", textures.resolution * textures.resolution * textures.stride(), textures.data.len())?;
    if mesh.triangles.iter().flatten().any(|&v| v as usize >= mesh.vertex_count()) {
        return Err(Error::invalid("layer", "triangle index out of range"));
    }
    Ok(())
}

/// Renders one deformed layer to a premultiplied RGBA image.
pub fn rasterize_layer(
    mesh: &RiggedMesh,
    deformed: &Deformed,
    textures: &RenderTextures,
    sw: &SpatialWeights,
    camera: &Camera,
    settings: &RenderSettings,
) -> Result<ImageF> {
    settings.validate()?;
    check_layer(mesh, deformed, textures, sw)?;
    let camera = settings.camera(camera);
    let frame = LayerFrame::new(mesh, deformed, textures, &camera, settings);
    let ctx = ShadeContext {
        sw,
        ray: PixelRays::new(&camera, settings),
        settings,
    };
    let ts = settings.tile_size;
    Ok(render_tiles(settings, |i, rect, buf| {
        let mut scratch = TileScratch::new(ts * ts, textures.stride(), textures.n_bases);
        rasterize_tile(&frame, i, rect, &ctx, &mut scratch, buf);
    }))
}

/// Per-frame state shared by all layers.
#[derive(Debug, Clone)]
pub struct FrameState {
    pub rig: FrameRig,
    pub spatial: SpatialWeights,
}

/// A bundle with textures prepared for rendering.
#[derive(Debug, Clone)]
pub struct Renderer<'a> {
    pub bundle: &'a AvatarBundle,
    pub textures: Vec<RenderTextures>,
}

impl<'a> Renderer<'a> {
    pub fn new(bundle: &'a AvatarBundle) -> Result<Self> {
        bundle.validate()?;
        let textures = bundle
            .atlases
            .iter()
            .map(RenderTextures::from_atlas)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bundle, textures })
    }

    /// Bone transforms and pose correctives (step 1).
    pub fn rig(&self, pose: &FramePose) -> Result<FrameRig> {
        FrameRig::new(&self.bundle.template, pose)
    }

    /// Hyper-network evaluation (step 2).
    pub fn decode(&self, pose: &FramePose) -> Result<SpatialWeights> {
        let t = &self.bundle.template;
        global_eval(&self.bundle.decoder, &t.appearance_features(&pose.rotations)?, &pose.expression)
    }

    pub fn prepare(&self, pose: &FramePose) -> Result<FrameState> {
        Ok(FrameState {
            rig: self.rig(pose)?,
            spatial: self.decode(pose)?,
        })
    }

    pub fn deform(&self, frame: &FrameRig) -> Result<Vec<Deformed>> {
        self.bundle.layers.iter().map(|l| deform_with(l, frame)).collect()
    }

    pub fn rasterize_layer(&self, index: usize, deformed: &Deformed, state: &FrameState, camera: &Camera, settings: &RenderSettings) -> Result<ImageF> {
        rasterize_layer(&self.bundle.layers[index], deformed, &self.textures[index], &state.spatial, camera, settings)
    }

    /// Full frame with per-tile layer compositing. Bit-identical to
    /// compositing the per-layer images of [`Renderer::rasterize_layer`].
    pub fn render(&self, pose: &FramePose, settings: &RenderSettings) -> Result<ImageF> {
        let state = self.prepare(pose)?;
        let deformed = self.deform(&state.rig)?;
        self.render_deformed(&state, &deformed, &pose.camera, settings)
    }

    pub fn render_deformed(&self, state: &FrameState, deformed: &[Deformed], camera: &Camera, settings: &RenderSettings) -> Result<ImageF> {
        settings.validate()?;
        Error::check_len("deformed layers", self.bundle.layers.len(), deformed.len())?;
        for ((l, d), t) in self.bundle.layers.iter().zip(deformed).zip(&self.textures) {
            check_layer(l, d, t, &state.spatial)?;
        }
        let camera = settings.camera(camera);
        let frames: Vec<LayerFrame> = self
            .bundle
            .layers
            .iter()
            .zip(deformed)
            .zip(&self.textures)
            .map(|((l, d), t)| LayerFrame::new(l, d, t, &camera, settings))
            .collect();
        let ctx = ShadeContext {
            sw: &state.spatial,
            ray: PixelRays::new(&camera, settings),
            settings,
        };
        let ts = settings.tile_size;
        let max_stride = self.textures.iter().map(RenderTextures::stride).max().unwrap_or(0);
        let n_bases = self.bundle.manifest.n_bases;
        Ok(render_tiles(settings, |i, rect, buf| {
            let mut scratch = TileScratch::new(ts * ts, max_stride, n_bases);
            let mut layer_buf = alloc::vec![0.0f32; ts * ts * 4];
            let n = rect.len() * 4;
            buf[..n].fill(0.0);
            for f in &frames {
                rasterize_tile(f, i, rect, &ctx, &mut scratch, &mut layer_buf);
                composite_over(&mut buf[..n], &layer_buf[..n]);
            }
        }))
    }
}

/// Renders `bundle` in `pose`.
pub fn render_frame(bundle: &AvatarBundle, pose: &FramePose, settings: &RenderSettings) -> Result<ImageF> {
    Renderer::new(bundle)?.render(pose, settings)
}

#[cfg(test)]
mod tests;
