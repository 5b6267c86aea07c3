//! Lattice field dumps (`.hbl`).
//!
//! ```text
//! 0    magic        8 bytes  "HBLATTIC"
//! 8    version      u32      1
//! 12   dims         3 × u32  nx, ny, nz (each ≥ 2)
//! 24   bounds       6 × f64  min x, y, z, max x, y, z
//! 72   n_bases      u32
//! 76   feature_dim  u32
//! 80   data_crc     u32      CRC-32 of the data block
//! 84   reserved     u32      zero
//! 88   data         f32 × nx·ny·nz·(1 + 4·n_bases + feature_dim)
//! ```
//!
//! Data is planar by channel; within a channel, x varies fastest, then y,
//! then z. Channel order: manifold value, `3·n_bases` colors (basis-major,
//! RGB), `n_bases` occupancies, `feature_dim` position features. Grid point
//! `(i, j, k)` sits at `min + (max − min) ⊙ (i, j, k) / (dims − 1)`.

use std::path::Path;

use headbake_core::field::lattice::LatticeField;
use headbake_core::math::Aabb;
use headbake_core::Vec3;

use crate::error::FormatError;

pub const MAGIC: [u8; 8] = *b"HBLATTIC";
pub const VERSION: u32 = 1;
const HEADER: usize = 88;

pub fn encode_lattice(l: &LatticeField) -> Result<Vec<u8>, FormatError> {
    l.validate()?;
    let mut data = Vec::with_capacity(l.data.len() * 4);
    for v in &l.data {
        data.extend_from_slice(&v.to_le_bytes());
    }
    let mut out = Vec::with_capacity(HEADER + data.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in l.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in l.bounds.min.to_array().into_iter().chain(l.bounds.max.to_array()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(l.n_bases as u32).to_le_bytes());
    out.extend_from_slice(&(l.feature_dim as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&data).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&data);
    Ok(out)
}

fn truncated(what: &str, offset: usize, need: usize, len: usize) -> FormatError {
    FormatError::Truncated {
        what: what.into(),
        offset: offset as u64,
        need: need as u64,
        len: len as u64,
    }
}

pub fn decode_lattice(bytes: &[u8]) -> Result<LatticeField, FormatError> {
    if bytes.len() < HEADER {
        if bytes.len() >= 8 && bytes[..8] != MAGIC {
            return Err(FormatError::BadMagic("lattice"));
        }
        return Err(truncated("lattice header", 0, HEADER, bytes.len()));
    }
    if bytes[..8] != MAGIC {
        return Err(FormatError::BadMagic("lattice"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion {
            what: "lattice",
            found: version,
            supported: VERSION,
        });
    }
    let dims = [u32_at(12) as usize, u32_at(16) as usize, u32_at(20) as usize];
    let b: Vec<f64> = (0..6).map(|i| f64_at(24 + 8 * i)).collect();
    let (n_bases, feature_dim) = (u32_at(72) as usize, u32_at(76) as usize);
    let crc = u32_at(80);
    let count = dims
        .iter()
        .try_fold(LatticeField::channel_count(n_bases, feature_dim), |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| FormatError::malformed("lattice", "size overflow"))?;
    let data = bytes
        .get(HEADER..HEADER + count)
        .ok_or_else(|| truncated("lattice data", HEADER, count, bytes.len()))?;
    if crc32fast::hash(data) != crc {
        return Err(FormatError::ChecksumMismatch("lattice data".into()));
    }
    if bytes.len() != HEADER + count {
        return Err(FormatError::malformed("lattice", format!("{} trailing bytes", bytes.len() - HEADER - count)));
    }
    let lattice = LatticeField {
        dims,
        bounds: Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5])),
        n_bases,
        feature_dim,
        data: data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
    };
    lattice.validate()?;
    Ok(lattice)
}

pub fn save_lattice(l: &LatticeField, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let bytes = encode_lattice(l)?;
    std::fs::write(path.as_ref(), bytes).map_err(|e| FormatError::io(path, e))
}

pub fn load_lattice(path: impl AsRef<Path>) -> Result<LatticeField, FormatError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| FormatError::io(path, e))?;
    decode_lattice(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> LatticeField {
        let dims = [3, 2, 4];
        let n = 3 * 2 * 4 * LatticeField::channel_count(2, 3);
        LatticeField {
            dims,
            bounds: Aabb::new(Vec3::new(-1.0, -0.5, -2.0), Vec3::new(1.0, 0.5, 0.1)),
            n_bases: 2,
            feature_dim: 3,
            data: (0..n).map(|i| i as f32 * 0.25 - 3.0).collect(),
        }
    }

    #[test]
    fn roundtrip() {
        let l = lattice();
        let bytes = encode_lattice(&l).unwrap();
        assert_eq!(bytes.len(), HEADER + l.data.len() * 4);
        assert_eq!(decode_lattice(&bytes).unwrap(), l);
    }

    #[test]
    fn header_fields_at_documented_offsets() {
        let bytes = encode_lattice(&lattice()).unwrap();
        assert_eq!(&bytes[..8], b"HBLATTIC");
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(bytes[64..72].try_into().unwrap()), 0.1);
        assert_eq!(f32::from_le_bytes(bytes[88..92].try_into().unwrap()), -3.0);
    }

    #[test]
    fn corruption_is_reported() {
        let bytes = encode_lattice(&lattice()).unwrap();
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() ^= 1;
        assert!(matches!(decode_lattice(&bad), Err(FormatError::ChecksumMismatch(_))));
        assert!(matches!(decode_lattice(&bytes[..100]), Err(FormatError::Truncated { .. })));
        assert!(matches!(decode_lattice(b"nope"), Err(FormatError::Truncated { .. })));
        assert!(matches!(decode_lattice(&[0u8; 100]), Err(FormatError::BadMagic(_))));
    }
}
