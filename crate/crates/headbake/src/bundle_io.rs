//! The `.hbb` bundle container.
//!
//! All integers little-endian. Offsets are absolute from the start of the
//! file.
//!
//! ```text
//! 0        magic          8 bytes  "HBAKEBND"
//! 8        version        u32      FORMAT_VERSION
//! 12       manifest_len   u32      length of the JSON manifest in bytes
//! 16       manifest       UTF-8 JSON, zero padded to a multiple of 16
//! D        section_count  u32
//! D+4      header_crc     u32      CRC-32 of bytes [0, D) followed by the directory
//! D+8      reserved       u64      zero
//! D+16     directory      section_count entries of 32 bytes:
//!                           tag     8 bytes ASCII, zero padded
//!                           offset  u64
//!                           length  u64
//!                           crc     u32  CRC-32 of the payload
//!                           zero    u32
//! ...      payloads       each starting on a 16-byte boundary, zero padded
//! ```
//!
//! Sections, in order: `template`, `decoder`, then `layerNNN` and `atlasNNN`
//! for every layer. Layer and template payloads use the encodings in
//! [`headbake_core::asset`]; an atlas payload is the raw RGBA8 atlas image,
//! row-major, with dimensions given by the manifest's atlas layout.

use std::path::Path;

use headbake_core::asset::{self, AtlasLayout, AvatarBundle, LayerAtlas, Manifest, FORMAT_VERSION, TILE_CHANNELS};
use headbake_core::image::Image8;

use crate::error::FormatError;
use crate::manifest::ManifestDoc;

pub const MAGIC: [u8; 8] = *b"HBAKEBND";
pub const ALIGN: usize = 16;
const DIR_HEADER: usize = 16;
const DIR_ENTRY: usize = 32;

pub fn align_up(n: usize) -> usize {
    n.div_ceil(ALIGN) * ALIGN
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionEntry {
    pub tag: String,
    pub offset: u64,
    pub length: u64,
    pub crc: u32,
}

fn tag_bytes(tag: &str) -> [u8; 8] {
    let mut out = [0u8; 8];
    out[..tag.len()].copy_from_slice(tag.as_bytes());
    out
}

pub fn layer_tag(i: usize) -> String {
    format!("layer{i:03}")
}

pub fn atlas_tag(i: usize) -> String {
    format!("atlas{i:03}")
}

/// Checks that every layer shares the manifest's atlas layout.
fn shared_layout(b: &AvatarBundle) -> Result<Option<&AtlasLayout>, FormatError> {
    let layout = b.manifest.atlas.as_ref();
    for (i, a) in b.atlases.iter().enumerate() {
        if Some(&a.layout) != layout {
            return Err(FormatError::malformed("bundle", format!("layer {i} atlas layout differs from the manifest")));
        }
    }
    Ok(layout)
}

fn sections(b: &AvatarBundle) -> Result<Vec<(String, Vec<u8>)>, FormatError> {
    b.validate()?;
    if b.layers.len() > 1000 {
        return Err(FormatError::malformed("bundle", "more than 1000 layers"));
    }
    shared_layout(b)?;
    let mut out = vec![
        ("template".to_string(), asset::encode_template(&b.template)),
        ("decoder".to_string(), asset::encode_decoder(&b.decoder)),
    ];
    for (i, (l, a)) in b.layers.iter().zip(&b.atlases).enumerate() {
        out.push((layer_tag(i), asset::encode_layer(l)));
        out.push((atlas_tag(i), a.image.data.clone()));
    }
    Ok(out)
}

pub fn manifest_json(m: &Manifest) -> Result<Vec<u8>, FormatError> {
    Ok(serde_json::to_vec_pretty(&ManifestDoc::from(m))?)
}

/// Serializes `b` into the container format.
pub fn encode_bundle(b: &AvatarBundle) -> Result<Vec<u8>, FormatError> {
    let manifest = manifest_json(&b.manifest)?;
    let sections = sections(b)?;
    let dir_start = align_up(16 + manifest.len());
    let mut offset = align_up(dir_start + DIR_HEADER + DIR_ENTRY * sections.len());
    let mut entries = Vec::with_capacity(sections.len());
    for (tag, bytes) in &sections {
        entries.push(SectionEntry {
            tag: tag.clone(),
            offset: offset as u64,
            length: bytes.len() as u64,
            crc: crc32fast::hash(bytes),
        });
        offset = align_up(offset + bytes.len());
    }
    let mut out = Vec::with_capacity(offset);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    out.extend_from_slice(&manifest);
    out.resize(dir_start, 0);
    let mut dir = Vec::with_capacity(DIR_ENTRY * entries.len());
    for e in &entries {
        dir.extend_from_slice(&tag_bytes(&e.tag));
        dir.extend_from_slice(&e.offset.to_le_bytes());
        dir.extend_from_slice(&e.length.to_le_bytes());
        dir.extend_from_slice(&e.crc.to_le_bytes());
        dir.extend_from_slice(&0u32.to_le_bytes());
    }
    let mut h = crc32fast::Hasher::new();
    h.update(&out);
    h.update(&dir);
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    out.extend_from_slice(&h.finalize().to_le_bytes());
    out.extend_from_slice(&0u64.to_le_bytes());
    out.extend_from_slice(&dir);
    for ((_, bytes), e) in sections.iter().zip(&entries) {
        out.resize(e.offset as usize, 0);
        out.extend_from_slice(bytes);
    }
    out.resize(align_up(out.len()), 0);
    Ok(out)
}

/// Size in bytes of the encoded container, computed without building it.
pub fn encoded_size(b: &AvatarBundle) -> Result<u64, FormatError> {
    b.validate()?;
    shared_layout(b)?;
    let manifest = manifest_json(&b.manifest)?;
    let mut lengths = vec![
        asset::encode_template(&b.template).len(),
        asset::encode_decoder(&b.decoder).len(),
    ];
    for (l, a) in b.layers.iter().zip(&b.atlases) {
        lengths.push(asset::encode_layer(l).len());
        lengths.push(a.image.data.len());
    }
    let mut offset = align_up(align_up(16 + manifest.len()) + DIR_HEADER + DIR_ENTRY * lengths.len());
    for n in lengths {
        offset = align_up(offset + n);
    }
    Ok(offset as u64)
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn slice(&self, what: &str, offset: u64, need: u64) -> Result<&'a [u8], FormatError> {
        let len = self.bytes.len() as u64;
        match offset.checked_add(need) {
            Some(end) if end <= len => Ok(&self.bytes[offset as usize..end as usize]),
            _ => Err(FormatError::Truncated {
                what: what.into(),
                offset,
                need,
                len,
            }),
        }
    }

    fn u32(&self, what: &str, offset: u64) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.slice(what, offset, 4)?.try_into().unwrap()))
    }
}

/// Parsed header: manifest plus section directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub version: u32,
    pub manifest: Manifest,
    pub sections: Vec<SectionEntry>,
}

pub fn read_header(bytes: &[u8]) -> Result<Header, FormatError> {
    let c = Cursor { bytes };
    if c.slice("magic", 0, 8)? != MAGIC {
        return Err(FormatError::BadMagic("bundle"));
    }
    let version = c.u32("version", 8)?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion {
            what: "bundle",
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let manifest_len = c.u32("manifest length", 12)? as u64;
    let manifest_bytes = c.slice("manifest", 16, manifest_len)?;
    let dir_start = align_up(16 + manifest_len as usize) as u64;
    let count = c.u32("section count", dir_start)? as u64;
    let header_crc = c.u32("header checksum", dir_start + 4)?;
    let dir = c.slice("section directory", dir_start + DIR_HEADER as u64, count * DIR_ENTRY as u64)?;
    let mut h = crc32fast::Hasher::new();
    h.update(c.slice("header", 0, dir_start)?);
    h.update(dir);
    if h.finalize() != header_crc {
        return Err(FormatError::ChecksumMismatch("header".into()));
    }
    let doc: ManifestDoc = serde_json::from_slice(manifest_bytes)?;
    let sections = dir
        .chunks_exact(DIR_ENTRY)
        .map(|e| SectionEntry {
            tag: String::from_utf8_lossy(&e[..8]).trim_end_matches('\0').to_string(),
            offset: u64::from_le_bytes(e[8..16].try_into().unwrap()),
            length: u64::from_le_bytes(e[16..24].try_into().unwrap()),
            crc: u32::from_le_bytes(e[24..28].try_into().unwrap()),
        })
        .collect();
    Ok(Header {
        version,
        manifest: doc.into(),
        sections,
    })
}

/// Parses and validates a container.
pub fn decode_bundle(bytes: &[u8]) -> Result<AvatarBundle, FormatError> {
    let header = read_header(bytes)?;
    let c = Cursor { bytes };
    let section = |tag: &str| -> Result<&[u8], FormatError> {
        let e = header
            .sections
            .iter()
            .find(|e| e.tag == tag)
            .ok_or_else(|| FormatError::malformed("bundle", format!("missing section {tag}")))?;
        let data = c.slice(tag, e.offset, e.length)?;
        if crc32fast::hash(data) != e.crc {
            return Err(FormatError::ChecksumMismatch(format!("section {tag}")));
        }
        Ok(data)
    };
    let m = header.manifest;
    let template = asset::decode_template(section("template")?)?;
    let decoder = asset::decode_decoder(section("decoder")?)?;
    let mut layers = Vec::with_capacity(m.n_layers);
    let mut atlases = Vec::with_capacity(m.n_layers);
    for i in 0..m.n_layers {
        layers.push(asset::decode_layer(section(&layer_tag(i))?)?);
        let layout = m
            .atlas
            .clone()
            .ok_or_else(|| FormatError::malformed("manifest", "layers present but no atlas layout"))?;
        let (w, h) = layout.atlas_size();
        let data = section(&atlas_tag(i))?.to_vec();
        let image = Image8::from_data(w, h, TILE_CHANNELS, data)?;
        atlases.push(LayerAtlas { image, layout });
    }
    let b = AvatarBundle {
        manifest: m,
        template,
        layers,
        atlases,
        decoder,
    };
    b.validate()?;
    Ok(b)
}

pub fn save_bundle(b: &AvatarBundle, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let bytes = encode_bundle(b)?;
    std::fs::write(path.as_ref(), bytes).map_err(|e| FormatError::io(path, e))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<AvatarBundle, FormatError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| FormatError::io(path, e))?;
    decode_bundle(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::tiny_bundle;

    #[test]
    fn roundtrip_is_identity_and_bytes_stable() {
        let b = tiny_bundle(2, 7);
        let bytes = encode_bundle(&b).unwrap();
        assert_eq!(bytes.len() as u64, encoded_size(&b).unwrap());
        assert_eq!(bytes.len() % ALIGN, 0);
        let back = decode_bundle(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(encode_bundle(&back).unwrap(), bytes);
    }

    #[test]
    fn payloads_are_aligned() {
        let h = read_header(&encode_bundle(&tiny_bundle(3, 1)).unwrap()).unwrap();
        assert_eq!(h.sections.len(), 2 + 2 * 3);
        assert!(h.sections.iter().all(|e| e.offset % ALIGN as u64 == 0));
        assert_eq!(h.sections[2].tag, "layer000");
        assert_eq!(h.sections[7].tag, "atlas002");
    }

    #[test]
    fn distinct_load_errors() {
        let bytes = encode_bundle(&tiny_bundle(1, 2)).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_bundle(&bad), Err(FormatError::BadMagic(_))));

        let mut bad = bytes.clone();
        bad[8..12].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        assert!(matches!(
            decode_bundle(&bad),
            Err(FormatError::UnsupportedVersion { found, .. }) if found == FORMAT_VERSION + 1
        ));

        let h = read_header(&bytes).unwrap();
        let atlas = h.sections.iter().find(|e| e.tag == "atlas000").unwrap();
        let mut bad = bytes.clone();
        bad[atlas.offset as usize + 5] ^= 0x40;
        match decode_bundle(&bad) {
            Err(FormatError::ChecksumMismatch(s)) => assert!(s.contains("atlas000")),
            other => panic!("{other:?}"),
        }

        let mut bad = bytes.clone();
        bad[20] ^= 1;
        assert!(matches!(decode_bundle(&bad), Err(FormatError::ChecksumMismatch(s)) if s == "header"));

        let cut = &bytes[..atlas.offset as usize + 3];
        assert!(matches!(decode_bundle(cut), Err(FormatError::Truncated { .. })));
        assert!(matches!(decode_bundle(&bytes[..5]), Err(FormatError::Truncated { .. })));
    }

    #[test]
    fn empty_bundle_roundtrip() {
        let b = tiny_bundle(0, 0);
        let back = decode_bundle(&encode_bundle(&b).unwrap()).unwrap();
        assert_eq!(back.manifest, b.manifest);
        assert!(back.layers.is_empty());
    }
}
