//! Conversion of continuous fields into layered rigged meshes and textures.

pub mod atlas;
pub mod attributes;
pub mod grid;
pub mod marching_cubes;
pub mod simplify;
pub mod texture;

use alloc::vec::Vec;

pub use atlas::{generate_uv_atlas, AtlasConfig, UvAtlas};
pub use attributes::{bake_vertex_attributes, VertexAttributes};
pub use grid::{GridSpec, ScalarGrid};
pub use marching_cubes::{extract, marching_cubes, CaseTable};
pub use simplify::{simplify, SimplifyConfig, SimplifyStats};
pub use texture::{bake_float_textures, bake_textures, finish_textures, FloatTextures, TextureConfig, TextureSet, TextureStats};

use crate::field::FieldScene;
use crate::mesh::{RiggedMesh, TriMesh};
use crate::{Error, Result};

/// All knobs of the bake pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BakeConfig {
    pub grid_resolution: usize,
    pub target_faces: usize,
    pub theta_max_deg: f64,
    pub back_ratio: f64,
    pub texture_resolution: usize,
    pub samples_per_texel: usize,
    pub seed: u64,
    pub gutter: usize,
    pub dilation_passes: usize,
    pub max_chart_angle_deg: f64,
}

impl Default for BakeConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 256,
            target_faces: 10_000,
            theta_max_deg: 120.0,
            back_ratio: 0.2,
            texture_resolution: 1024,
            samples_per_texel: 16,
            seed: 0,
            gutter: 2,
            dilation_passes: 4,
            max_chart_angle_deg: 60.0,
        }
    }
}

impl BakeConfig {
    pub fn simplify(&self) -> SimplifyConfig {
        SimplifyConfig {
            target_faces: self.target_faces,
            theta_max_deg: self.theta_max_deg,
            back_ratio: self.back_ratio,
            ..SimplifyConfig::default()
        }
    }

    pub fn atlas(&self) -> AtlasConfig {
        AtlasConfig {
            resolution: self.texture_resolution,
            gutter: self.gutter,
            max_chart_angle_deg: self.max_chart_angle_deg,
            ..AtlasConfig::default()
        }
    }

    pub fn texture(&self) -> TextureConfig {
        TextureConfig {
            resolution: self.texture_resolution,
            samples_per_texel: self.samples_per_texel,
            seed: self.seed,
            dilation_passes: self.dilation_passes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(Error::Config("grid resolution must be at least 2".into()));
        }
        if !(self.max_chart_angle_deg > 0.0 && self.max_chart_angle_deg < 90.0) {
            return Err(Error::Config("chart angle must lie in (0, 90)".into()));
        }
        self.simplify().validate()?;
        self.texture().grid_side()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerStats {
    pub level: f64,
    pub extracted_faces: usize,
    pub simplify: SimplifyStats,
    pub vertices: usize,
    pub charts: usize,
    pub chart_splits: usize,
    pub occupancy: f64,
    pub normal_fallbacks: usize,
    pub textures: TextureStats,
}

/// One layer's mesh before texture baking.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGeometry {
    pub mesh: RiggedMesh,
    pub stats: LayerStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BakedLayers {
    pub layers: Vec<RiggedMesh>,
    pub textures: Vec<TextureSet>,
    pub stats: Vec<LayerStats>,
}

/// Samples the manifold once for all levels.
pub fn sample_scene(scene: &FieldScene, cfg: &BakeConfig) -> Result<ScalarGrid> {
    ScalarGrid::sample(scene.manifold.as_ref(), GridSpec::cubic(cfg.grid_resolution, scene.bounds))
}

/// Extracts, simplifies, unwraps and rigs one level.
pub fn bake_layer_geometry(
    scene: &FieldScene,
    grid: &ScalarGrid,
    table: &CaseTable,
    level_index: usize,
    cfg: &BakeConfig,
) -> Result<LayerGeometry> {
    let level = scene.levels[level_index];
    let raw = extract(grid, table, level);
    if raw.is_empty() {
        return Err(Error::EmptyLevel { level });
    }
    let (mesh, simplify_stats) = simplify(&raw, &cfg.simplify())?;
    if mesh.is_empty() {
        return Err(Error::EmptyLevel { level });
    }
    let atlas = generate_uv_atlas(&mesh, &cfg.atlas())?;
    let attrs = bake_vertex_attributes(&mesh, scene, grid.spec.max_cell() / 4.0)?;
    let rigged = assemble_layer(&mesh, &atlas, &attrs, level_index, level);
    let stats = LayerStats {
        level,
        extracted_faces: raw.face_count(),
        simplify: simplify_stats,
        vertices: rigged.vertex_count(),
        charts: atlas.charts.len(),
        chart_splits: atlas.splits,
        occupancy: atlas.occupancy,
        normal_fallbacks: attrs.normal_fallbacks,
        textures: TextureStats::default(),
    };
    Ok(LayerGeometry { mesh: rigged, stats })
}

/// Splits attributes along atlas seams.
pub fn assemble_layer(mesh: &TriMesh, atlas: &UvAtlas, attrs: &VertexAttributes, level_index: usize, level: f64) -> RiggedMesh {
    let src = &attrs.rigging;
    let mut rigging = crate::rig::VertexRigging::zeros(0, src.n_expr, src.n_pose, src.n_joints);
    let mut positions = Vec::with_capacity(atlas.vertex_map.len());
    let mut normals = Vec::with_capacity(atlas.vertex_map.len());
    for &v in &atlas.vertex_map {
        let v = v as usize;
        positions.push(mesh.positions[v].to_f32());
        normals.push(attrs.normals[v].to_f32());
        rigging.push(src.expr_of(v), src.pose_of(v), src.weights_of(v));
    }
    RiggedMesh {
        positions,
        normals,
        uvs: atlas.uvs.clone(),
        triangles: atlas.triangles.clone(),
        rigging,
        level_index: level_index as u32,
        level,
    }
}

/// Runs the whole pipeline for every level of `scene`, inner to outer.
pub fn bake_scene(scene: &FieldScene, cfg: &BakeConfig) -> Result<BakedLayers> {
    scene.validate()?;
    cfg.validate()?;
    let grid = sample_scene(scene, cfg)?;
    let table = CaseTable::build();
    let mut out = BakedLayers {
        layers: Vec::new(),
        textures: Vec::new(),
        stats: Vec::new(),
    };
    for i in 0..scene.levels.len() {
        let LayerGeometry { mesh, mut stats } = bake_layer_geometry(scene, &grid, &table, i, cfg)?;
        let tex = bake_textures(&mesh, scene, &cfg.texture())?;
        stats.textures = tex.stats;
        out.layers.push(mesh);
        out.textures.push(tex);
        out.stats.push(stats);
    }
    Ok(out)
}
