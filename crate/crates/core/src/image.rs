//! Interleaved multi-channel images.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major interleaved image with `channels` values per pixel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Image<T> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<T>,
}

/// 8-bit texture or atlas.
pub type Image8 = Image<u8>;
/// Float image; RGBA render targets hold premultiplied color.
pub type ImageF = Image<f32>;

impl<T: Copy + Default> Image<T> {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: alloc::vec![T::default(); width * height * channels],
        }
    }

    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        Error::check_len("image data", width * height * channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[T] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [T] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_shape<U>(&self, other: &Image<U>) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

impl ImageF {
    /// Quantizes every channel to 8 bits.
    pub fn to_u8(&self) -> Image8 {
        Image8 {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| crate::asset::quantize(v as f64)).collect(),
        }
    }
}
