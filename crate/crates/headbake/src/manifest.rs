//! JSON form of the bundle manifest.

use headbake_core::asset::{AtlasLayout, Manifest, TileGroup};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGroupDoc {
    pub label: String,
    pub channels: usize,
    pub tiles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtlasLayoutDoc {
    pub tile_width: usize,
    pub tile_height: usize,
    pub cols: usize,
    pub rows: usize,
    pub groups: Vec<TileGroupDoc>,
}

impl From<&AtlasLayout> for AtlasLayoutDoc {
    fn from(l: &AtlasLayout) -> Self {
        Self {
            tile_width: l.tile_width,
            tile_height: l.tile_height,
            cols: l.cols,
            rows: l.rows,
            groups: l
                .groups
                .iter()
                .map(|g| TileGroupDoc {
                    label: g.label.clone(),
                    channels: g.channels,
                    tiles: g.tiles.clone(),
                })
                .collect(),
        }
    }
}

impl From<AtlasLayoutDoc> for AtlasLayout {
    fn from(d: AtlasLayoutDoc) -> Self {
        Self {
            tile_width: d.tile_width,
            tile_height: d.tile_height,
            cols: d.cols,
            rows: d.rows,
            groups: d
                .groups
                .into_iter()
                .map(|g| TileGroup {
                    label: g.label,
                    channels: g.channels,
                    tiles: g.tiles,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDoc {
    pub format_version: u32,
    pub scene: String,
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
    pub atlas: Option<AtlasLayoutDoc>,
    pub decoder_packing: String,
}

impl From<&Manifest> for ManifestDoc {
    fn from(m: &Manifest) -> Self {
        Self {
            format_version: m.format_version,
            scene: m.scene.clone(),
            provenance: m.provenance.clone(),
            n_layers: m.n_layers,
            n_bases: m.n_bases,
            feature_dim: m.feature_dim,
            n_expr: m.n_expr,
            n_pose: m.n_pose,
            n_joints: m.n_joints,
            texture_resolution: m.texture_resolution,
            levels: m.levels.clone(),
            layer_vertices: m.layer_vertices.clone(),
            layer_faces: m.layer_faces.clone(),
            atlas: m.atlas.as_ref().map(AtlasLayoutDoc::from),
            decoder_packing: m.decoder_packing.clone(),
        }
    }
}

impl From<ManifestDoc> for Manifest {
    fn from(d: ManifestDoc) -> Self {
        Self {
            format_version: d.format_version,
            scene: d.scene,
            provenance: d.provenance,
            n_layers: d.n_layers,
            n_bases: d.n_bases,
            feature_dim: d.feature_dim,
            n_expr: d.n_expr,
            n_pose: d.n_pose,
            n_joints: d.n_joints,
            texture_resolution: d.texture_resolution,
            levels: d.levels,
            layer_vertices: d.layer_vertices,
            layer_faces: d.layer_faces,
            atlas: d.atlas.map(AtlasLayout::from),
            decoder_packing: d.decoder_packing,
        }
    }
}
