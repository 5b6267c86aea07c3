//! Static asset directory for the browser viewer.
//!
//! ```text
//! <out>/manifest.json
//! <out>/decoder.bin          decoder blob, byte-identical to the bundle's decoder section
//! <out>/template.bin         template section bytes
//! <out>/layers/layerNNN.bin  layer section bytes (32-byte header, then arrays)
//! <out>/layers/atlasNNN.png  RGBA8 texture atlas, tiles laid out per `bundle.atlas`
//! ```
//!
//! `manifest.json` carries the bundle manifest plus, per layer, byte offsets
//! of every array inside the geometry buffer so the viewer can create typed
//! views without parsing the header. Offsets are multiples of 4.

use std::collections::BTreeMap;
use std::path::Path;

use headbake_core::asset::{decode_decoder, decode_layer, decode_template, encode_decoder, encode_layer, encode_template, AvatarBundle, LayerAtlas};
use headbake_core::mesh::RiggedMesh;
use serde::{Deserialize, Serialize};

use crate::error::FormatError;
use crate::images::{read_png, write_png};
use crate::manifest::ManifestDoc;

pub const WEB_FORMAT: &str = "headbake-web";
pub const WEB_VERSION: u32 = 1;
pub const LAYER_HEADER_BYTES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accessor {
    pub offset: usize,
    /// Element count (not scalar count).
    pub count: usize,
    pub components: usize,
    /// `"f32"` or `"u32"`.
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebLayer {
    pub index: usize,
    pub level: f64,
    pub geometry: String,
    pub geometry_bytes: usize,
    pub atlas: String,
    pub atlas_size: [usize; 2],
    pub accessors: BTreeMap<String, Accessor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobRef {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebManifest {
    pub format: String,
    pub version: u32,
    pub bundle: ManifestDoc,
    pub decoder: BlobRef,
    pub template: BlobRef,
    pub layers: Vec<WebLayer>,
}

/// Array offsets inside an encoded layer.
pub fn layer_accessors(l: &RiggedMesh) -> BTreeMap<String, Accessor> {
    let r = &l.rigging;
    let (nv, nf) = (l.vertex_count(), l.face_count());
    let arrays = [
        ("positions", nv, 3, "f32"),
        ("normals", nv, 3, "f32"),
        ("uvs", nv, 2, "f32"),
        ("triangles", nf, 3, "u32"),
        ("expr", nv, r.n_expr * 3, "f32"),
        ("pose", nv, r.n_pose * 27, "f32"),
        ("weights", nv, r.n_joints, "f32"),
    ];
    let mut offset = LAYER_HEADER_BYTES;
    let mut out = BTreeMap::new();
    for (name, count, components, dtype) in arrays {
        out.insert(
            name.to_string(),
            Accessor {
                offset,
                count,
                components,
                dtype: dtype.into(),
            },
        );
        offset += count * components * 4;
    }
    out
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}

fn blob(dir: &Path, name: &str, bytes: &[u8]) -> Result<BlobRef, FormatError> {
    write(&dir.join(name), bytes)?;
    Ok(BlobRef {
        file: name.into(),
        bytes: bytes.len(),
        sha256: crate::scene_source::sha256_hex(bytes),
    })
}

pub fn export_web(bundle: &AvatarBundle, dir: impl AsRef<Path>) -> Result<WebManifest, FormatError> {
    bundle.validate()?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| FormatError::io(dir, e))?;
    let decoder = blob(dir, "decoder.bin", &encode_decoder(&bundle.decoder))?;
    let template = blob(dir, "template.bin", &encode_template(&bundle.template))?;
    let mut layers = Vec::with_capacity(bundle.layers.len());
    if !bundle.layers.is_empty() {
        let ld = dir.join("layers");
        std::fs::create_dir_all(&ld).map_err(|e| FormatError::io(&ld, e))?;
    }
    for (i, (layer, atlas)) in bundle.layers.iter().zip(&bundle.atlases).enumerate() {
        let geometry = format!("layers/layer{i:03}.bin");
        let atlas_name = format!("layers/atlas{i:03}.png");
        let bytes = encode_layer(layer);
        write(&dir.join(&geometry), &bytes)?;
        write_png(&atlas.image, dir.join(&atlas_name))?;
        layers.push(WebLayer {
            index: i,
            level: layer.level,
            geometry,
            geometry_bytes: bytes.len(),
            atlas: atlas_name,
            atlas_size: [atlas.image.width, atlas.image.height],
            accessors: layer_accessors(layer),
        });
    }
    let manifest = WebManifest {
        format: WEB_FORMAT.into(),
        version: WEB_VERSION,
        bundle: ManifestDoc::from(&bundle.manifest),
        decoder,
        template,
        layers,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    write(&dir.join("manifest.json"), json.as_bytes())?;
    Ok(manifest)
}

fn read(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|e| FormatError::io(path, e))
}

fn read_blob(dir: &Path, b: &BlobRef) -> Result<Vec<u8>, FormatError> {
    let bytes = read(&dir.join(&b.file))?;
    if bytes.len() != b.bytes || crate::scene_source::sha256_hex(&bytes) != b.sha256 {
        return Err(FormatError::ChecksumMismatch(b.file.clone()));
    }
    Ok(bytes)
}

pub fn read_web_manifest(dir: impl AsRef<Path>) -> Result<WebManifest, FormatError> {
    let m: WebManifest = serde_json::from_slice(&read(&dir.as_ref().join("manifest.json"))?)?;
    if m.format != WEB_FORMAT {
        return Err(FormatError::BadMagic("web export"));
    }
    if m.version != WEB_VERSION {
        return Err(FormatError::UnsupportedVersion {
            what: "web export",
            found: m.version,
            supported: WEB_VERSION,
        });
    }
    Ok(m)
}

/// Reads an export directory back into a bundle.
pub fn import_web(dir: impl AsRef<Path>) -> Result<AvatarBundle, FormatError> {
    let dir = dir.as_ref();
    let m = read_web_manifest(dir)?;
    let decoder = decode_decoder(&read_blob(dir, &m.decoder)?)?;
    let template = decode_template(&read_blob(dir, &m.template)?)?;
    let manifest: headbake_core::asset::Manifest = m.bundle.into();
    let layout = manifest.atlas.clone();
    let mut layers = Vec::with_capacity(m.layers.len());
    let mut atlases = Vec::with_capacity(m.layers.len());
    for l in &m.layers {
        layers.push(decode_layer(&read(&dir.join(&l.geometry))?)?);
        let layout = layout
            .clone()
            .ok_or_else(|| FormatError::malformed("web export", "layers present but no atlas layout"))?;
        atlases.push(LayerAtlas {
            image: read_png(dir.join(&l.atlas))?,
            layout,
        });
    }
    let b = AvatarBundle {
        manifest,
        template,
        layers,
        atlases,
        decoder,
    };
    b.validate()?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::tiny_bundle;

    #[test]
    fn export_import_roundtrip() {
        let b = tiny_bundle(3, 5);
        let dir = tempfile::tempdir().unwrap();
        let m = export_web(&b, dir.path()).unwrap();
        assert_eq!(m.layers.len(), 3);
        for i in 0..3 {
            assert!(dir.path().join(format!("layers/layer{i:03}.bin")).is_file());
            assert!(dir.path().join(format!("layers/atlas{i:03}.png")).is_file());
        }
        assert_eq!(std::fs::read(dir.path().join("decoder.bin")).unwrap(), encode_decoder(&b.decoder));
        assert_eq!(import_web(dir.path()).unwrap(), b);
        assert_eq!(read_web_manifest(dir.path()).unwrap(), m);
    }

    #[test]
    fn accessors_cover_the_buffer() {
        let b = tiny_bundle(1, 2);
        let l = &b.layers[0];
        let acc = layer_accessors(l);
        let bytes = encode_layer(l);
        let end = acc.values().map(|a| a.offset + a.count * a.components * 4).max().unwrap();
        assert_eq!(end, bytes.len());
        let p = &acc["positions"];
        let x = f32::from_le_bytes(bytes[p.offset..p.offset + 4].try_into().unwrap());
        assert_eq!(x, l.positions[0][0]);
        let t = &acc["triangles"];
        let i = u32::from_le_bytes(bytes[t.offset + 4..t.offset + 8].try_into().unwrap());
        assert_eq!(i, l.triangles[0][1]);
        assert!(acc.values().all(|a| a.offset % 4 == 0));
    }

    #[test]
    fn empty_bundle_writes_no_layer_files() {
        let b = tiny_bundle(0, 1);
        let dir = tempfile::tempdir().unwrap();
        let m = export_web(&b, dir.path()).unwrap();
        assert!(m.layers.is_empty());
        assert!(!dir.path().join("layers").exists());
        assert_eq!(import_web(dir.path()).unwrap(), b);
    }

    #[test]
    fn tampered_decoder_is_rejected() {
        let b = tiny_bundle(1, 1);
        let dir = tempfile::tempdir().unwrap();
        export_web(&b, dir.path()).unwrap();
        let p = dir.path().join("decoder.bin");
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[20] ^= 1;
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(import_web(dir.path()), Err(FormatError::ChecksumMismatch(_))));
    }
}
