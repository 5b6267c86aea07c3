//! Supersampled texel baking of radiance bases and position features.

use alloc::vec::Vec;

use rand_core::RngCore;
use rand_pcg::Pcg32;

use super::atlas::{texel_center, FixedTri, SUBTEXEL};
use crate::asset::quantize;
use crate::field::FieldScene;
use crate::image::Image8;
use crate::math::{floor, sqrt, Vec3};
use crate::mesh::RiggedMesh;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureConfig {
    pub resolution: usize,
    /// A perfect square; samples form a jittered `k × k` grid.
    pub samples_per_texel: usize,
    pub seed: u64,
    pub dilation_passes: usize,
}

impl Default for TextureConfig {
    fn default() -> Self {
        Self {
            resolution: 1024,
            samples_per_texel: 16,
            seed: 0,
            dilation_passes: 4,
        }
    }
}

impl TextureConfig {
    pub fn grid_side(&self) -> Result<usize> {
        let k = round_sqrt(self.samples_per_texel);
        if k == 0 || k * k != self.samples_per_texel {
            return Err(Error::Config(alloc::format!(
                "samples per texel must be a positive perfect square, got {}",
                self.samples_per_texel
            )));
        }
        Ok(k)
    }
}

fn round_sqrt(n: usize) -> usize {
    let mut k = sqrt(n as f64) as usize;
    while (k + 1) * (k + 1) <= n {
        k += 1;
    }
    while k * k > n {
        k -= 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TextureStats {
    /// Texels hit by at least one sample.
    pub covered: usize,
    /// Texels filled by dilation.
    pub dilated: usize,
    /// Uncovered texels whose four direct neighbours are all covered.
    pub interior_gaps: usize,
}

/// Averaged texel values before quantization. Per texel: `n_bases` RGBA
/// groups followed by `feature_dim` feature channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatTextures {
    pub resolution: usize,
    pub n_bases: usize,
    pub feature_dim: usize,
    pub data: Vec<f32>,
    pub covered: Vec<bool>,
}

impl FloatTextures {
    pub fn stride(&self) -> usize {
        self.n_bases * 4 + self.feature_dim
    }

    pub fn texel(&self, x: usize, y: usize) -> &[f32] {
        let s = self.stride();
        let i = (y * self.resolution + x) * s;
        &self.data[i..i + s]
    }
}

/// Quantized layer textures.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureSet {
    pub resolution: usize,
    /// One RGBA image per radiance basis.
    pub radiance: Vec<Image8>,
    /// `feature_dim` channels.
    pub position: Image8,
    pub stats: TextureStats,
}

impl TextureSet {
    pub fn n_bases(&self) -> usize {
        self.radiance.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.position.channels
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.resolution;
        for img in self.radiance.iter() {
            if img.width != r || img.height != r || img.channels != 4 {
                return Err(Error::invalid("radiance texture", "shape mismatch"));
            }
        }
        if self.position.width != r || self.position.height != r {
            return Err(Error::invalid("position texture", "shape mismatch"));
        }
        Ok(())
    }
}

/// Stream-specific generator for one texel.
fn texel_rng(seed: u64, layer: u32, texel: usize) -> Pcg32 {
    let state = seed ^ (layer as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    Pcg32::new(state, texel as u64)
}

/// Jittered stratified sample offsets within a texel, in sub-texel units.
fn sample_offsets(rng: &mut Pcg32, k: usize, out: &mut Vec<[i64; 2]>) {
    out.clear();
    let mut unit = || (rng.next_u32() >> 8) as f64 * (1.0 / (1u32 << 24) as f64);
    for j in 0..k {
        for i in 0..k {
            let u = (i as f64 + unit()) / k as f64;
            let v = (j as f64 + unit()) / k as f64;
            let s = SUBTEXEL as f64;
            out.push([floor(u * s) as i64, floor(v * s) as i64]);
        }
    }
}

/// Bakes averaged texel values without quantization or dilation.
pub fn bake_float_textures(mesh: &RiggedMesh, scene: &FieldScene, cfg: &TextureConfig) -> Result<FloatTextures> {
    let k = cfg.grid_side()?;
    let r = cfg.resolution;
    if r == 0 {
        return Err(Error::Config("texture resolution must be positive".into()));
    }
    Error::check_len("uvs", mesh.vertex_count(), mesh.uvs.len())?;
    let n_bases = scene.n_bases();
    let feature_dim = scene.feature_dim();
    let stride = n_bases * 4 + feature_dim;

    let tris: Vec<Option<(FixedTri, [usize; 4])>> = mesh
        .triangles
        .iter()
        .map(|t| {
            let ft = FixedTri::new(t.map(|v| mesh.uvs[v as usize]), r)?;
            let b = ft.texel_bounds(r)?;
            Some((ft, b))
        })
        .collect();
    let mut rows: Vec<Vec<u32>> = alloc::vec![Vec::new(); r];
    for (t, entry) in tris.iter().enumerate() {
        if let Some((_, [_, y0, _, y1])) = entry {
            for row in &mut rows[*y0..=*y1] {
                row.push(t as u32);
            }
        }
    }
    let positions: Vec<Vec3> = mesh.positions.iter().map(|p| Vec3::from_f32(*p)).collect();

    let baked = par::map_range(r, |y| {
        let mut sums = Vec::new();
        let mut counts = alloc::vec![0u32; r];
        if rows[y].is_empty() {
            return (Vec::new(), counts);
        }
        sums.resize(r * stride, 0.0f64);
        let mut offsets: Vec<Vec<[i64; 2]>> = Vec::new();
        let mut scratch = Vec::with_capacity(k * k);
        for x in 0..r {
            sample_offsets(&mut texel_rng(cfg.seed, mesh.level_index, y * r + x), k, &mut scratch);
            offsets.push(scratch.clone());
        }
        let mut sample = scene.new_sample();
        for &t in &rows[y] {
            let (ft, [x0, _, x1, _]) = tris[t as usize].expect("bucketed triangles are valid");
            let tri = mesh.triangles[t as usize];
            for x in x0..=x1 {
                let base = [x as i64 * SUBTEXEL, y as i64 * SUBTEXEL];
                for o in &offsets[x] {
                    let Some(b) = ft.cover([base[0] + o[0], base[1] + o[1]]) else {
                        continue;
                    };
                    let p = positions[tri[0] as usize] * b[0]
                        + positions[tri[1] as usize] * b[1]
                        + positions[tri[2] as usize] * b[2];
                    scene.radiance_eval_into(p, &mut sample);
                    let acc = &mut sums[x * stride..(x + 1) * stride];
                    for i in 0..n_bases {
                        let c = sample.colors[i];
                        acc[i * 4] += c[0] as f64;
                        acc[i * 4 + 1] += c[1] as f64;
                        acc[i * 4 + 2] += c[2] as f64;
                        acc[i * 4 + 3] += sample.occupancies[i] as f64;
                    }
                    for (a, f) in acc[n_bases * 4..].iter_mut().zip(&sample.feature) {
                        *a += *f as f64;
                    }
                    counts[x] += 1;
                }
            }
        }
        let avg: Vec<f32> = sums
            .chunks_exact(stride)
            .zip(&counts)
            .flat_map(|(s, &n)| s.iter().map(move |v| if n == 0 { 0.0 } else { (v / n as f64) as f32 }))
            .collect();
        (avg, counts)
    });

    let mut data = alloc::vec![0.0f32; r * r * stride];
    let mut covered = alloc::vec![false; r * r];
    for (y, (avg, counts)) in baked.into_iter().enumerate() {
        if avg.is_empty() {
            continue;
        }
        data[y * r * stride..(y + 1) * r * stride].copy_from_slice(&avg);
        for (x, &n) in counts.iter().enumerate() {
            covered[y * r + x] = n > 0;
        }
    }
    Ok(FloatTextures {
        resolution: r,
        n_bases,
        feature_dim,
        data,
        covered,
    })
}

/// Neighbour visiting order for dilation.
const NEIGHBOURS: [(isize, isize); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];

/// Fills uncovered texels from covered neighbours, one ring per pass.
/// Returns the number of texels filled.
pub fn dilate(data: &mut [u8], stride: usize, resolution: usize, covered: &mut [bool], passes: usize) -> usize {
    let r = resolution as isize;
    let mut filled = 0;
    for _ in 0..passes {
        let before = covered.to_vec();
        let mut any = false;
        for y in 0..r {
            for x in 0..r {
                let t = (y * r + x) as usize;
                if before[t] {
                    continue;
                }
                let src = NEIGHBOURS.iter().find_map(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    let inside = nx >= 0 && ny >= 0 && nx < r && ny < r;
                    let n = (ny * r + nx) as usize;
                    (inside && before[n]).then_some(n)
                });
                if let Some(n) = src {
                    data.copy_within(n * stride..(n + 1) * stride, t * stride);
                    covered[t] = true;
                    filled += 1;
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
    }
    filled
}

fn interior_gaps(covered: &[bool], r: usize) -> usize {
    let mut gaps = 0;
    for y in 1..r.saturating_sub(1) {
        for x in 1..r - 1 {
            let t = y * r + x;
            if !covered[t] && covered[t - 1] && covered[t + 1] && covered[t - r] && covered[t + r] {
                gaps += 1;
            }
        }
    }
    gaps
}

/// Quantizes and dilates float textures into per-basis RGBA images and a
/// position feature image.
pub fn finish_textures(tex: &FloatTextures, dilation_passes: usize) -> Result<TextureSet> {
    let r = tex.resolution;
    let stride = tex.stride();
    let mut bytes: Vec<u8> = tex.data.iter().map(|&v| quantize(v as f64)).collect();
    let mut covered = tex.covered.clone();
    let stats_covered = covered.iter().filter(|&&c| c).count();
    let gaps = interior_gaps(&covered, r);
    let dilated = dilate(&mut bytes, stride, r, &mut covered, dilation_passes);
    let mut radiance: Vec<Image8> = (0..tex.n_bases).map(|_| Image8::new(r, r, 4)).collect();
    let mut position = Image8::new(r, r, tex.feature_dim);
    for (t, texel) in bytes.chunks_exact(stride).enumerate() {
        for (i, img) in radiance.iter_mut().enumerate() {
            img.data[t * 4..t * 4 + 4].copy_from_slice(&texel[i * 4..i * 4 + 4]);
        }
        let d = tex.feature_dim;
        position.data[t * d..(t + 1) * d].copy_from_slice(&texel[tex.n_bases * 4..]);
    }
    Ok(TextureSet {
        resolution: r,
        radiance,
        position,
        stats: TextureStats {
            covered: stats_covered,
            dilated,
            interior_gaps: gaps,
        },
    })
}

/// Full texel bake of one layer.
pub fn bake_textures(mesh: &RiggedMesh, scene: &FieldScene, cfg: &TextureConfig) -> Result<TextureSet> {
    let tex = bake_float_textures(mesh, scene, cfg)?;
    finish_textures(&tex, cfg.dilation_passes)
}

/// Texel center in `[0,1]²` texture space.
pub fn texel_uv(x: usize, y: usize, resolution: usize) -> [f64; 2] {
    let c = texel_center(x, y);
    let s = (resolution as i64 * SUBTEXEL) as f64;
    [c[0] as f64 / s, c[1] as f64 / s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asset::dequantize;
    use crate::bake::atlas::{generate_uv_atlas, AtlasConfig};
    use crate::field::library::{self, SceneConfig};
    use crate::rig::VertexRigging;

    fn quad_mesh() -> RiggedMesh {
        RiggedMesh {
            positions: alloc::vec![[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 1.0, 0.0]],
            normals: alloc::vec![[0.0, 0.0, 1.0]; 4],
            uvs: alloc::vec![[0.1, 0.1], [0.9, 0.1], [0.9, 0.9], [0.1, 0.9]],
            triangles: alloc::vec![[0, 1, 2], [0, 2, 3]],
            rigging: VertexRigging::zeros(4, 0, 0, 1),
            level_index: 0,
            level: 0.0,
        }
    }

    fn small_cfg() -> SceneConfig {
        SceneConfig {
            n_bases: 2,
            feature_dim: 3,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn constant_radiance_is_exact() {
        let cfg = small_cfg();
        let scene = library::constant_sphere(&cfg, [0.2, 0.4, 0.6], 0.7);
        let set = bake_textures(&quad_mesh(), &scene, &TextureConfig { resolution: 32, ..TextureConfig::default() }).unwrap();
        set.validate().unwrap();
        assert!(set.stats.covered > 0);
        for img in &set.radiance {
            for t in 0..32 * 32 {
                let px = &img.data[t * 4..t * 4 + 4];
                if px == [0, 0, 0, 0] {
                    continue;
                }
                for (v, want) in px.iter().zip([0.2, 0.4, 0.6, 0.7]) {
                    assert!((dequantize(*v) - want).abs() <= 1.0 / 255.0);
                }
            }
        }
    }

    #[test]
    fn full_quad_interior_is_covered() {
        let scene = library::constant_sphere(&small_cfg(), [0.5; 3], 1.0);
        let tex = bake_float_textures(&quad_mesh(), &scene, &TextureConfig { resolution: 20, ..TextureConfig::default() }).unwrap();
        for y in 3..17 {
            for x in 3..17 {
                assert!(tex.covered[y * 20 + x], "{x},{y}");
            }
        }
        assert!(!tex.covered[0]);
    }

    #[test]
    fn dilation_fills_rings_in_order() {
        let r = 5;
        let mut data = alloc::vec![0u8; r * r];
        let mut covered = alloc::vec![false; r * r];
        data[12] = 9;
        covered[12] = true;
        let filled = dilate(&mut data, 1, r, &mut covered, 1);
        assert_eq!(filled, 8);
        assert!(data[6..9].iter().all(|&v| v == 9));
        assert_eq!(data[0], 0);
        let filled = dilate(&mut data, 1, r, &mut covered, 4);
        assert_eq!(filled, 16);
        assert!(data.iter().all(|&v| v == 9));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let scene = library::sphere_shell(&small_cfg());
        let c = TextureConfig { resolution: 16, ..TextureConfig::default() };
        let a = bake_float_textures(&quad_mesh(), &scene, &c).unwrap();
        let b = bake_float_textures(&quad_mesh(), &scene, &c).unwrap();
        assert_eq!(a, b);
        let d = bake_float_textures(&quad_mesh(), &scene, &TextureConfig { seed: 7, ..c }).unwrap();
        assert_ne!(a.data, d.data);
    }

    #[test]
    fn axis_gradient_feature_is_monotone_along_chart() {
        let cfg = small_cfg();
        let scene = library::axis_gradient(&cfg);
        // Quad in the xy plane with u along x.
        let set = bake_float_textures(&quad_mesh(), &scene, &TextureConfig { resolution: 32, ..TextureConfig::default() }).unwrap();
        let f0 = set.n_bases * 4;
        for y in 6..26 {
            let mut last = f32::NEG_INFINITY;
            for x in 6..26 {
                let v = set.texel(x, y)[f0];
                assert!(v >= last - 1e-6, "row {y} col {x}");
                last = v;
            }
        }
    }

    #[test]
    fn rejects_non_square_sample_count() {
        let c = TextureConfig { samples_per_texel: 8, ..TextureConfig::default() };
        assert!(c.grid_side().is_err());
        assert_eq!(TextureConfig { samples_per_texel: 1, ..c }.grid_side().unwrap(), 1);
    }

    #[test]
    fn atlas_bake_on_cube() {
        let m = crate::mesh::tests::cube();
        let atlas = generate_uv_atlas(&m, &AtlasConfig { resolution: 64, ..AtlasConfig::default() }).unwrap();
        let rm = RiggedMesh {
            positions: atlas.vertex_map.iter().map(|&v| m.positions[v as usize].to_f32()).collect(),
            normals: alloc::vec![[0.0, 0.0, 1.0]; atlas.uvs.len()],
            uvs: atlas.uvs.clone(),
            triangles: atlas.triangles.clone(),
            rigging: VertexRigging::zeros(atlas.uvs.len(), 0, 0, 1),
            level_index: 0,
            level: 0.0,
        };
        let scene = library::constant_sphere(&small_cfg(), [0.5; 3], 1.0);
        let set = bake_textures(&rm, &scene, &TextureConfig { resolution: 64, ..TextureConfig::default() }).unwrap();
        let ratio = set.stats.covered as f64 / (64.0 * 64.0);
        assert!((ratio - atlas.occupancy).abs() < 0.15, "{ratio} vs {}", atlas.occupancy);
        assert_eq!(set.stats.interior_gaps, 0);
    }
}
