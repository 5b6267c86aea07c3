//! Quantization, atlas tiling, the in-memory avatar bundle and the binary
//! encodings of its payload sections.
//!
//! All section encodings are little-endian; floats are IEEE-754 binary32
//! except level values, which are binary64.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bake::{TextureSet, TextureStats};
use crate::decoder::{Activation, DecoderWeights, DenseLayer, Mlp, SpatialArch};
use crate::image::Image8;
use crate::mesh::RiggedMesh;
use crate::rig::{FlameTemplate, VertexRigging};
use crate::{Error, Result};

/// Current bundle format version.
pub const FORMAT_VERSION: u32 = 1;

/// Tile channel count.
pub const TILE_CHANNELS: usize = 4;

/// Description of how decoder parameters are laid out in the decoder blob.
pub const DECODER_PACKING: &str = "f32le; per dense layer: row-major weights [outputs][inputs], then bias";

#[inline]
pub fn quantize(x: f64) -> u8 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    crate::math::round(x * 255.0) as u8
}

#[inline]
pub fn dequantize(q: u8) -> f64 {
    q as f64 / 255.0
}

/// `dequantize` in `f32`, as used by the renderer.
#[inline]
pub fn dequantize_f32(q: u8) -> f32 {
    q as f32 * (1.0 / 255.0)
}

/// Where one source image lives in an atlas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGroup {
    pub label: String,
    pub channels: usize,
    /// Tile indices in channel order; tile `k` holds channels `4k..4k+4`.
    pub tiles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtlasLayout {
    pub tile_width: usize,
    pub tile_height: usize,
    pub cols: usize,
    pub rows: usize,
    pub groups: Vec<TileGroup>,
}

impl AtlasLayout {
    pub fn tile_count(&self) -> usize {
        self.groups.iter().map(|g| g.tiles.len()).sum()
    }

    pub fn atlas_size(&self) -> (usize, usize) {
        (self.cols * self.tile_width, self.rows * self.tile_height)
    }

    /// Top-left texel of tile `t`.
    pub fn tile_origin(&self, t: usize) -> (usize, usize) {
        ((t % self.cols) * self.tile_width, (t / self.cols) * self.tile_height)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.tile_count();
        if self.rows * self.cols < n {
            return Err(Error::invalid("atlas layout", format!("{}×{} grid holds fewer than {n} tiles", self.cols, self.rows)));
        }
        let mut seen = alloc::vec![false; self.rows * self.cols];
        for g in &self.groups {
            Error::check_len("tiles per group", g.channels.div_ceil(TILE_CHANNELS), g.tiles.len())?;
            for &t in &g.tiles {
                if t >= seen.len() || core::mem::replace(&mut seen[t], true) {
                    return Err(Error::invalid("atlas layout", format!("tile {t} out of range or reused")));
                }
            }
        }
        Ok(())
    }
}

/// Packs images into RGBA tiles on a near-square grid, 4 channels per tile.
pub fn tile_atlas(images: &[&Image8]) -> Result<(Image8, AtlasLayout)> {
    let (w, h) = images.first().map_or((0, 0), |i| (i.width, i.height));
    if images.iter().any(|i| i.width != w || i.height != h) {
        return Err(Error::invalid("atlas", "source images differ in resolution"));
    }
    let mut groups = Vec::with_capacity(images.len());
    let mut next = 0;
    for (i, img) in images.iter().enumerate() {
        let n = img.channels.div_ceil(TILE_CHANNELS);
        groups.push(TileGroup {
            label: format!("image{i}"),
            channels: img.channels,
            tiles: (next..next + n).collect(),
        });
        next += n;
    }
    let cols = grid_cols(next);
    let rows = if next == 0 { 0 } else { next.div_ceil(cols) };
    let layout = AtlasLayout {
        tile_width: w,
        tile_height: h,
        cols,
        rows,
        groups,
    };
    let (aw, ah) = layout.atlas_size();
    let mut atlas = Image8::new(aw, ah, TILE_CHANNELS);
    for (img, g) in images.iter().zip(&layout.groups) {
        for (k, &t) in g.tiles.iter().enumerate() {
            let (ox, oy) = layout.tile_origin(t);
            let c0 = k * TILE_CHANNELS;
            let nc = (img.channels - c0).min(TILE_CHANNELS);
            for y in 0..h {
                for x in 0..w {
                    let src = &img.pixel(x, y)[c0..c0 + nc];
                    atlas.pixel_mut(ox + x, oy + y)[..nc].copy_from_slice(src);
                }
            }
        }
    }
    Ok((atlas, layout))
}

fn grid_cols(n: usize) -> usize {
    let mut c = 0;
    while c * c < n {
        c += 1;
    }
    c
}

/// Inverse of [`tile_atlas`].
pub fn untile(atlas: &Image8, layout: &AtlasLayout) -> Result<Vec<Image8>> {
    layout.validate()?;
    let (aw, ah) = layout.atlas_size();
    if atlas.width != aw || atlas.height != ah || atlas.channels != TILE_CHANNELS {
        return Err(Error::invalid("atlas", "image does not match layout"));
    }
    let (w, h) = (layout.tile_width, layout.tile_height);
    let mut out = Vec::with_capacity(layout.groups.len());
    for g in &layout.groups {
        let mut img = Image8::new(w, h, g.channels);
        for (k, &t) in g.tiles.iter().enumerate() {
            let (ox, oy) = layout.tile_origin(t);
            let c0 = k * TILE_CHANNELS;
            let nc = (g.channels - c0).min(TILE_CHANNELS);
            for y in 0..h {
                for x in 0..w {
                    let src = &atlas.pixel(ox + x, oy + y)[..nc];
                    img.pixel_mut(x, y)[c0..c0 + nc].copy_from_slice(src);
                }
            }
        }
        out.push(img);
    }
    Ok(out)
}

/// One layer's textures as a single tiled atlas: radiance bases first, then
/// the position feature.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerAtlas {
    pub image: Image8,
    pub layout: AtlasLayout,
}

impl LayerAtlas {
    pub fn from_textures(tex: &TextureSet) -> Result<Self> {
        let mut images: Vec<&Image8> = tex.radiance.iter().collect();
        images.push(&tex.position);
        let (image, mut layout) = tile_atlas(&images)?;
        let n = tex.radiance.len();
        for (i, g) in layout.groups.iter_mut().enumerate() {
            g.label = if i < n { format!("basis{i}") } else { "feature".into() };
        }
        Ok(Self { image, layout })
    }

    /// Recovers the per-basis and feature images. Bake statistics are not
    /// stored and come back zeroed.
    pub fn to_textures(&self) -> Result<TextureSet> {
        let mut images = untile(&self.image, &self.layout)?;
        let position = images.pop().ok_or_else(|| Error::invalid("atlas", "no feature group"))?;
        Ok(TextureSet {
            resolution: self.layout.tile_width,
            radiance: images,
            position,
            stats: TextureStats::default(),
        })
    }

    pub fn n_bases(&self) -> usize {
        self.layout.groups.len().saturating_sub(1)
    }

    pub fn feature_dim(&self) -> usize {
        self.layout.groups.last().map_or(0, |g| g.channels)
    }
}

/// Counts and descriptors; the human-readable part of a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub format_version: u32,
    pub scene: String,
    /// Digest identifying the source scene and bake settings.
    pub provenance: String,
    pub n_layers: usize,
    pub n_bases: usize,
    pub feature_dim: usize,
    pub n_expr: usize,
    pub n_pose: usize,
    pub n_joints: usize,
    pub texture_resolution: usize,
    pub levels: Vec<f64>,
    pub layer_vertices: Vec<usize>,
    pub layer_faces: Vec<usize>,
    pub atlas: Option<AtlasLayout>,
    pub decoder_packing: String,
}

/// Everything the renderer needs.
#[derive(Debug, Clone, PartialEq)]
pub struct AvatarBundle {
    pub manifest: Manifest,
    pub template: FlameTemplate,
    /// Ascending level order, inner to outer.
    pub layers: Vec<RiggedMesh>,
    pub atlases: Vec<LayerAtlas>,
    pub decoder: DecoderWeights,
}

impl AvatarBundle {
    /// Builds a bundle and fills in the manifest counts.
    pub fn new(
        scene: &str,
        provenance: &str,
        template: FlameTemplate,
        layers: Vec<RiggedMesh>,
        textures: &[TextureSet],
        decoder: DecoderWeights,
    ) -> Result<Self> {
        Error::check_len("layer textures", layers.len(), textures.len())?;
        let atlases = textures.iter().map(LayerAtlas::from_textures).collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            format_version: FORMAT_VERSION,
            scene: scene.into(),
            provenance: provenance.into(),
            n_layers: layers.len(),
            n_bases: decoder.n_bases,
            feature_dim: decoder.feature_dim,
            n_expr: template.n_expr,
            n_pose: template.pose_count(),
            n_joints: template.joint_count(),
            texture_resolution: textures.first().map_or(0, |t| t.resolution),
            levels: layers.iter().map(|l| l.level).collect(),
            layer_vertices: layers.iter().map(RiggedMesh::vertex_count).collect(),
            layer_faces: layers.iter().map(RiggedMesh::face_count).collect(),
            atlas: atlases.first().map(|a| a.layout.clone()),
            decoder_packing: DECODER_PACKING.into(),
        };
        let b = Self {
            manifest,
            template,
            layers,
            atlases,
            decoder,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Unsupported(format!("bundle format version {}", m.format_version)));
        }
        self.template.validate()?;
        self.decoder.validate()?;
        Error::check_len("layers", m.n_layers, self.layers.len())?;
        Error::check_len("atlases", m.n_layers, self.atlases.len())?;
        Error::check_len("levels", m.n_layers, m.levels.len())?;
        Error::check_len("decoder bases", m.n_bases, self.decoder.n_bases)?;
        Error::check_len("decoder feature width", m.feature_dim, self.decoder.feature_dim)?;
        Error::check_len("template expressions", m.n_expr, self.template.n_expr)?;
        Error::check_len("template joints", m.n_joints, self.template.joint_count())?;
        Error::check_len("template pose joints", m.n_pose, self.template.pose_count())?;
        Error::check_len("decoder expressions", m.n_expr, self.decoder.expr_dim)?;
        if m.levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("manifest", "levels must ascend"));
        }
        for (i, (layer, atlas)) in self.layers.iter().zip(&self.atlases).enumerate() {
            layer.validate()?;
            let r = &layer.rigging;
            Error::check_len("layer expressions", m.n_expr, r.n_expr)?;
            Error::check_len("layer pose joints", m.n_pose, r.n_pose)?;
            Error::check_len("layer joints", m.n_joints, r.n_joints)?;
            Error::check_len("layer vertices", m.layer_vertices[i], layer.vertex_count())?;
            Error::check_len("layer faces", m.layer_faces[i], layer.face_count())?;
            if layer.level != m.levels[i] || layer.level_index as usize != i {
                return Err(Error::invalid("layer", format!("layer {i} level does not match manifest")));
            }
            atlas.layout.validate()?;
            Error::check_len("atlas bases", m.n_bases, atlas.n_bases())?;
            Error::check_len("atlas feature width", m.feature_dim, atlas.feature_dim())?;
            Error::check_len("atlas resolution", m.texture_resolution, atlas.layout.tile_width)?;
            Error::check_len("atlas resolution", m.texture_resolution, atlas.layout.tile_height)?;
            let (aw, ah) = atlas.layout.atlas_size();
            if atlas.image.width != aw || atlas.image.height != ah || atlas.image.channels != TILE_CHANNELS {
                return Err(Error::invalid("atlas", format!("layer {i} atlas image does not match its layout")));
            }
        }
        Ok(())
    }

    /// The innermost `n` layers with the manifest trimmed to match.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n > self.layers.len() {
            return Err(Error::Config(format!("bundle has {} layers, asked for {n}", self.layers.len())));
        }
        self.subset(&(0..n).collect::<Vec<_>>())
    }

    /// `n` layers spread evenly over the level range, centered.
    pub fn spread(&self, n: usize) -> Result<Self> {
        let total = self.layers.len();
        if n == 0 || n > total {
            return Err(Error::Config(format!("bundle has {total} layers, asked for {n}")));
        }
        let picks: Vec<usize> = (0..n)
            .map(|k| crate::math::round((k as f64 + 0.5) * total as f64 / n as f64 - 0.5) as usize)
            .collect();
        self.subset(&picks)
    }

    /// The layers at strictly ascending `indices`, renumbered from zero.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let total = self.layers.len();
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.last().is_some_and(|&i| i >= total) {
            return Err(Error::Config(format!("layer selection {indices:?} out of range or not ascending ({total} layers)")));
        }
        let m = &self.manifest;
        let mut manifest = m.clone();
        manifest.n_layers = indices.len();
        manifest.levels = indices.iter().map(|&i| m.levels[i]).collect();
        manifest.layer_vertices = indices.iter().map(|&i| m.layer_vertices[i]).collect();
        manifest.layer_faces = indices.iter().map(|&i| m.layer_faces[i]).collect();
        let layers = indices
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut l = self.layers[i].clone();
                l.level_index = k as u32;
                l
            })
            .collect();
        let b = Self {
            manifest,
            template: self.template.clone(),
            layers,
            atlases: indices.iter().map(|&i| self.atlases[i].clone()).collect(),
            decoder: self.decoder.clone(),
        };
        b.validate()?;
        Ok(b)
    }

    /// Encoded payload sizes in bytes.
    pub fn size_report(&self) -> SizeReport {
        let geometry = self.layers.iter().map(|l| encode_layer(l).len() as u64).sum();
        let textures = self.atlases.iter().map(|a| a.image.data.len() as u64).sum();
        let template = encode_template(&self.template).len() as u64;
        let decoder = encode_decoder(&self.decoder).len() as u64;
        SizeReport {
            geometry,
            textures,
            template,
            decoder,
            triangles: self.layers.iter().map(|l| l.face_count() as u64).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeReport {
    pub geometry: u64,
    pub textures: u64,
    pub template: u64,
    pub decoder: u64,
    pub triangles: u64,
}

impl SizeReport {
    pub fn payload_total(&self) -> u64 {
        self.geometry + self.textures + self.template + self.decoder
    }
}

/// Little-endian byte writer.
#[derive(Debug, Default, Clone)]
pub struct ByteWriter {
    pub bytes: Vec<u8>,
}

impl ByteWriter {
    pub fn u32(&mut self, v: u32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    pub fn len(&mut self, v: usize) {
        self.u32(v as u32);
    }
    pub fn f32(&mut self, v: f32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f32s(&mut self, v: &[f32]) {
        for x in v {
            self.f32(*x);
        }
    }
    pub fn u32s(&mut self, v: &[u32]) {
        for x in v {
            self.u32(*x);
        }
    }
    /// Length-prefixed `f32` array.
    pub fn f32_array(&mut self, v: &[f32]) {
        self.len(v.len());
        self.f32s(v);
    }
    pub fn index_array(&mut self, v: &[usize]) {
        self.len(v.len());
        for x in v {
            self.len(*x);
        }
    }
}

/// Little-endian byte reader over a section.
#[derive(Debug, Clone)]
pub struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::invalid("section", format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    pub fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::invalid("section", "length overflow"))?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
    pub fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::invalid("section", "length overflow"))?)?;
        Ok(raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
    }
    pub fn f32_array(&mut self) -> Result<Vec<f32>> {
        let n = self.len()?;
        self.f32s(n)
    }
    pub fn index_array(&mut self) -> Result<Vec<usize>> {
        let n = self.len()?;
        Ok(self.u32s(n)?.into_iter().map(|x| x as usize).collect())
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::invalid("section", format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

/// Layer geometry section: header `[level_index u32, level f64, n_vertices,
/// n_faces, n_expr, n_pose, n_joints]`, then positions, normals, uvs,
/// triangle indices, expression blendshapes, pose correctives and skinning
/// weights as flat arrays.
pub fn encode_layer(l: &RiggedMesh) -> Vec<u8> {
    let mut w = ByteWriter::default();
    let r = &l.rigging;
    w.u32(l.level_index);
    w.f64(l.level);
    w.len(l.vertex_count());
    w.len(l.face_count());
    w.len(r.n_expr);
    w.len(r.n_pose);
    w.len(r.n_joints);
    w.f32s(l.positions.as_flattened());
    w.f32s(l.normals.as_flattened());
    w.f32s(l.uvs.as_flattened());
    w.u32s(l.triangles.as_flattened());
    w.f32s(&r.expr);
    w.f32s(&r.pose);
    w.f32s(&r.weights);
    w.bytes
}

pub fn decode_layer(bytes: &[u8]) -> Result<RiggedMesh> {
    let mut r = ByteReader::new(bytes);
    let level_index = r.u32()?;
    let level = r.f64()?;
    let nv = r.len()?;
    let nf = r.len()?;
    let (ne, np, nj) = (r.len()?, r.len()?, r.len()?);
    let positions = r.f32s(nv * 3)?.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let normals = r.f32s(nv * 3)?.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let uvs = r.f32s(nv * 2)?.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    let triangles = r.u32s(nf * 3)?.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let rigging = VertexRigging {
        n_expr: ne,
        n_pose: np,
        n_joints: nj,
        expr: r.f32s(nv * ne * 3)?,
        pose: r.f32s(nv * np * 27)?,
        weights: r.f32s(nv * nj)?,
    };
    r.finish()?;
    Ok(RiggedMesh {
        positions,
        normals,
        uvs,
        triangles,
        rigging,
        level_index,
        level,
    })
}

/// Template section. Parents are stored with `u32::MAX` for the root.
pub fn encode_template(t: &FlameTemplate) -> Vec<u8> {
    let mut w = ByteWriter::default();
    w.len(t.vertices.len());
    w.f32s(t.vertices.as_flattened());
    w.len(t.n_expr);
    w.f32_array(&t.expr_basis);
    w.f32_array(&t.joint_regressor);
    w.len(t.parents.len());
    for p in &t.parents {
        w.u32(p.map_or(u32::MAX, |p| p as u32));
    }
    w.index_array(&t.corrective_joints);
    w.index_array(&t.eye_joints);
    w.u32(t.eye_correctives as u32);
    w.index_array(&t.appearance_joints);
    w.bytes
}

pub fn decode_template(bytes: &[u8]) -> Result<FlameTemplate> {
    let mut r = ByteReader::new(bytes);
    let nv = r.len()?;
    let vertices = r.f32s(nv * 3)?.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let n_expr = r.len()?;
    let expr_basis = r.f32_array()?;
    let joint_regressor = r.f32_array()?;
    let nj = r.len()?;
    let parents = r
        .u32s(nj)?
        .into_iter()
        .map(|p| (p != u32::MAX).then_some(p as usize))
        .collect();
    let corrective_joints = r.index_array()?;
    let eye_joints = r.index_array()?;
    let eye_correctives = r.u32()? != 0;
    let appearance_joints = r.index_array()?;
    r.finish()?;
    Ok(FlameTemplate {
        vertices,
        expr_basis,
        n_expr,
        joint_regressor,
        parents,
        corrective_joints,
        eye_joints,
        eye_correctives,
        appearance_joints,
    })
}

fn write_activation(w: &mut ByteWriter, a: Activation) {
    w.u32(a.tag());
    w.f32(a.slope());
}

fn read_activation(r: &mut ByteReader) -> Result<Activation> {
    let tag = r.u32()?;
    let slope = r.f32()?;
    Activation::from_tag(tag, slope)
}

/// Decoder blob: `[n_bases, feature_dim, expr_dim, rotation_dim]`, the
/// spatial architecture (`n_sizes`, sizes, one `(tag, slope)` per layer),
/// the global layer count, then per global layer
/// `[inputs, outputs, tag, slope]` followed by its weights and bias.
pub fn encode_decoder(d: &DecoderWeights) -> Vec<u8> {
    let mut w = ByteWriter::default();
    for n in [d.n_bases, d.feature_dim, d.expr_dim, d.rotation_dim] {
        w.len(n);
    }
    w.index_array(&d.spatial.sizes);
    for a in &d.spatial.activations {
        write_activation(&mut w, *a);
    }
    w.len(d.global.layers.len());
    for l in &d.global.layers {
        w.len(l.inputs);
        w.len(l.outputs);
        write_activation(&mut w, l.activation);
    }
    for l in &d.global.layers {
        w.f32s(&l.weights);
        w.f32s(&l.bias);
    }
    w.bytes
}

pub fn decode_decoder(bytes: &[u8]) -> Result<DecoderWeights> {
    let mut r = ByteReader::new(bytes);
    let (n_bases, feature_dim, expr_dim, rotation_dim) = (r.len()?, r.len()?, r.len()?, r.len()?);
    let sizes = r.index_array()?;
    let activations = (0..sizes.len().saturating_sub(1))
        .map(|_| read_activation(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let n = r.len()?;
    let mut shapes = Vec::with_capacity(n.min(1024));
    for _ in 0..n {
        shapes.push((r.len()?, r.len()?, read_activation(&mut r)?));
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for (inputs, outputs, activation) in shapes {
        let weights = r.f32s(inputs * outputs)?;
        let bias = r.f32s(outputs)?;
        layers.push(DenseLayer {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        });
    }
    r.finish()?;
    Ok(DecoderWeights {
        global: Mlp { layers },
        spatial: SpatialArch { sizes, activations },
        n_bases,
        feature_dim,
        expr_dim,
        rotation_dim,
    })
}
