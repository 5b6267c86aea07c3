//! Texel-interleaved layer textures for the shading loop.

use alloc::vec::Vec;

use crate::asset::LayerAtlas;
use crate::bake::TextureSet;
use crate::math::floorf;
use crate::{Error, Result};

/// Per texel: `feature_dim` position-feature bytes, then one RGBA group per
/// radiance basis.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderTextures {
    pub resolution: usize,
    pub n_bases: usize,
    pub feature_dim: usize,
    pub data: Vec<u8>,
}

impl RenderTextures {
    pub fn stride(&self) -> usize {
        self.feature_dim + 4 * self.n_bases
    }

    pub fn from_set(tex: &TextureSet) -> Result<Self> {
        tex.validate()?;
        let r = tex.resolution;
        let (nb, dp) = (tex.n_bases(), tex.feature_dim());
        if r == 0 {
            return Err(Error::Config("texture resolution is zero".into()));
        }
        let stride = dp + 4 * nb;
        let mut data = alloc::vec![0u8; r * r * stride];
        for (t, texel) in data.chunks_exact_mut(stride).enumerate() {
            texel[..dp].copy_from_slice(&tex.position.data[t * dp..(t + 1) * dp]);
            for (i, img) in tex.radiance.iter().enumerate() {
                texel[dp + 4 * i..dp + 4 * i + 4].copy_from_slice(&img.data[t * 4..t * 4 + 4]);
            }
        }
        Ok(Self {
            resolution: r,
            n_bases: nb,
            feature_dim: dp,
            data,
        })
    }

    pub fn from_atlas(atlas: &LayerAtlas) -> Result<Self> {
        Self::from_set(&atlas.to_textures()?)
    }

    /// Bilinear lookup of every channel, dequantized to `[0, 1]`. Texel
    /// centers sit at `(i + 0.5)/R`; coordinates clamp at the border.
    #[inline(always)]
    pub fn sample_bilinear(&self, uv: [f32; 2], out: &mut [f32]) {
        let r = self.resolution;
        let stride = self.stride();
        let x = uv[0] * r as f32 - 0.5;
        let y = uv[1] * r as f32 - 0.5;
        let x0f = floorf(x);
        let y0f = floorf(y);
        let (fx, fy) = (x - x0f, y - y0f);
        let max = r as i64 - 1;
        let cx = |v: i64| v.clamp(0, max) as usize;
        let (x0, x1) = (cx(x0f as i64), cx(x0f as i64 + 1));
        let (y0, y1) = (cx(y0f as i64), cx(y0f as i64 + 1));
        let s = 1.0 / 255.0;
        let (w00, w10) = ((1.0 - fx) * (1.0 - fy) * s, fx * (1.0 - fy) * s);
        let (w01, w11) = ((1.0 - fx) * fy * s, fx * fy * s);
        let at = |t: usize| &self.data[t * stride..(t + 1) * stride];
        let (t00, t10, t01, t11) = (at(y0 * r + x0), at(y0 * r + x1), at(y1 * r + x0), at(y1 * r + x1));
        let out = &mut out[..stride];
        for c in 0..stride {
            out[c] = w00 * t00[c] as f32 + w10 * t10[c] as f32 + w01 * t01[c] as f32 + w11 * t11[c] as f32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image8;

    fn set(r: usize) -> TextureSet {
        let radiance = (0..2)
            .map(|i| Image8::from_data(r, r, 4, (0..r * r * 4).map(|k| (k * 7 + i * 50) as u8).collect()).unwrap())
            .collect();
        let position = Image8::from_data(r, r, 3, (0..r * r * 3).map(|k| (k * 3) as u8).collect()).unwrap();
        TextureSet {
            resolution: r,
            radiance,
            position,
            stats: Default::default(),
        }
    }

    #[test]
    fn texel_centers_are_exact() {
        let s = set(4);
        let t = RenderTextures::from_set(&s).unwrap();
        let mut out = alloc::vec![0.0; t.stride()];
        for y in 0..4 {
            for x in 0..4 {
                t.sample_bilinear([(x as f32 + 0.5) / 4.0, (y as f32 + 0.5) / 4.0], &mut out);
                let want_f = s.position.pixel(x, y);
                for c in 0..3 {
                    assert!((out[c] - want_f[c] as f32 / 255.0).abs() < 1e-6);
                }
                let want_b = s.radiance[1].pixel(x, y);
                for c in 0..4 {
                    assert!((out[3 + 4 + c] - want_b[c] as f32 / 255.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn midpoint_averages() {
        let t = RenderTextures::from_set(&set(4)).unwrap();
        let mut a = alloc::vec![0.0; t.stride()];
        let mut b = a.clone();
        let mut m = a.clone();
        t.sample_bilinear([0.5 / 4.0, 0.5 / 4.0], &mut a);
        t.sample_bilinear([1.5 / 4.0, 0.5 / 4.0], &mut b);
        t.sample_bilinear([1.0 / 4.0, 0.5 / 4.0], &mut m);
        for c in 0..t.stride() {
            assert!((m[c] - 0.5 * (a[c] + b[c])).abs() < 1e-5);
        }
    }
}
