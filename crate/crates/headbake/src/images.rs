//! PNG and raw float image files.
//!
//! Raw float dumps (`.f32`): magic `"HBIMGF32"`, then `width`, `height`,
//! `channels` as little-endian u32, then `width·height·channels` f32 values,
//! row-major and interleaved.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use headbake_core::image::{Image8, ImageF};

use crate::error::FormatError;

pub const RAW_MAGIC: [u8; 8] = *b"HBIMGF32";

fn color_type(channels: usize) -> Result<png::ColorType, FormatError> {
    Ok(match channels {
        1 => png::ColorType::Grayscale,
        2 => png::ColorType::GrayscaleAlpha,
        3 => png::ColorType::Rgb,
        4 => png::ColorType::Rgba,
        c => return Err(FormatError::malformed("png", format!("{c} channels"))),
    })
}

pub fn write_png(img: &Image8, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    enc.set_color(color_type(img.channels)?);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| FormatError::Png(e.to_string()))?;
    w.write_image_data(&img.data).map_err(|e| FormatError::Png(e.to_string()))?;
    w.finish().map_err(|e| FormatError::Png(e.to_string()))
}

pub fn read_png(path: impl AsRef<Path>) -> Result<Image8, FormatError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut dec = png::Decoder::new(std::io::BufReader::new(file))
        .read_info()
        .map_err(|e| FormatError::Png(e.to_string()))?;
    let mut buf = vec![0; dec.output_buffer_size()];
    let info = dec.next_frame(&mut buf).map_err(|e| FormatError::Png(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(FormatError::Png(format!("unsupported bit depth {:?}", info.bit_depth)));
    }
    buf.truncate(info.buffer_size());
    Ok(Image8::from_data(info.width as usize, info.height as usize, info.color_type.samples(), buf)?)
}

/// Converts a premultiplied RGBA render to straight-alpha 8-bit.
pub fn unpremultiply_to_u8(img: &ImageF) -> Image8 {
    let mut out = Image8::new(img.width, img.height, 4);
    for (o, p) in out.data.chunks_exact_mut(4).zip(img.data.chunks_exact(4)) {
        let a = p[3];
        let inv = if a > 0.0 { 1.0 / a } else { 0.0 };
        for c in 0..3 {
            o[c] = headbake_core::asset::quantize((p[c] * inv) as f64);
        }
        o[3] = headbake_core::asset::quantize(a as f64);
    }
    out
}

pub fn encode_raw(img: &ImageF) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + img.data.len() * 4);
    out.extend_from_slice(&RAW_MAGIC);
    for v in [img.width, img.height, img.channels] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in &img.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_raw(bytes: &[u8]) -> Result<ImageF, FormatError> {
    if bytes.len() < 20 {
        return Err(FormatError::Truncated {
            what: "raw image header".into(),
            offset: 0,
            need: 20,
            len: bytes.len() as u64,
        });
    }
    if bytes[..8] != RAW_MAGIC {
        return Err(FormatError::BadMagic("raw float image"));
    }
    let dim = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (w, h, c) = (dim(8), dim(12), dim(16));
    let need = w * h * c * 4;
    if bytes.len() - 20 != need {
        return Err(FormatError::Truncated {
            what: "raw image data".into(),
            offset: 20,
            need: need as u64,
            len: bytes.len() as u64,
        });
    }
    let data = bytes[20..].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    Ok(ImageF::from_data(w, h, c, data)?)
}

pub fn write_raw(img: &ImageF, path: impl AsRef<Path>) -> Result<(), FormatError> {
    std::fs::write(path.as_ref(), encode_raw(img)).map_err(|e| FormatError::io(path, e))
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<ImageF, FormatError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| FormatError::io(path, e))?;
    decode_raw(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_roundtrip_rgba_and_gray() {
        let dir = tempfile::tempdir().unwrap();
        for channels in [1, 3, 4] {
            let img = Image8::from_data(5, 3, channels, (0..15 * channels).map(|i| (i * 17) as u8).collect()).unwrap();
            let p = dir.path().join(format!("t{channels}.png"));
            write_png(&img, &p).unwrap();
            assert_eq!(read_png(&p).unwrap(), img);
        }
    }

    #[test]
    fn raw_roundtrip_and_truncation() {
        let img = ImageF::from_data(2, 2, 4, (0..16).map(|i| i as f32 / 7.0).collect()).unwrap();
        let bytes = encode_raw(&img);
        assert_eq!(decode_raw(&bytes).unwrap(), img);
        assert!(matches!(decode_raw(&bytes[..30]), Err(FormatError::Truncated { .. })));
    }

    #[test]
    fn unpremultiply_recovers_color() {
        let img = ImageF::from_data(2, 1, 4, vec![0.25, 0.1, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let out = unpremultiply_to_u8(&img);
        assert_eq!(out.data, vec![128, 51, 0, 128, 0, 0, 0, 0]);
    }
}
