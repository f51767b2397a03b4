//! Raster image representation shared by every other module.
//!
//! Images are 8-bit, row-major, channel-interleaved, with 1 (gray) or 3
//! (RGB) channels. Values are immutable after construction; operations
//! return new images. Pixel centers sit at `index + 0.5` on both axes.

use crate::error::{Error, Result};

/// An owned 8-bit raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

impl Image {
    /// Builds an image from raw row-major, channel-interleaved samples.
    pub fn from_samples(width: u32, height: u32, channels: u8, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(Error::InvalidImage(format!(
                "sample buffer holds {} bytes, {}x{}x{} needs {}",
                samples.len(),
                width,
                height,
                channels,
                expected
            )));
        }
        Ok(Self { width, height, channels, samples })
    }

    /// A solid image filled with `value` in every channel.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Self::from_samples(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// Flat sample index of `(col, row)`, first channel.
    #[inline]
    pub fn offset(&self, col: u32, row: u32) -> usize {
        (row as usize * self.width as usize + col as usize) * self.channels as usize
    }

    /// Sample value at `(col, row)` for one channel.
    #[inline]
    pub fn sample(&self, col: u32, row: u32, channel: u8) -> u8 {
        debug_assert!(col < self.width && row < self.height && channel < self.channels);
        self.samples[self.offset(col, row) + channel as usize]
    }

    /// True when both images have identical geometry.
    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
    }

    pub(crate) fn shape_mismatch(&self, other: &Image) -> Error {
        Error::DimensionMismatch {
            a_width: self.width,
            a_height: self.height,
            a_channels: self.channels,
            b_width: other.width,
            b_height: other.height,
            b_channels: other.channels,
        }
    }
}

/// An in-bounds pixel address; construction fails out of bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelCoord {
    col: u32,
    row: u32,
}

impl PixelCoord {
    pub fn new(col: u32, row: u32, width: u32, height: u32) -> Result<Self> {
        if col >= width || row >= height {
            return Err(Error::InvalidImage(format!(
                "pixel ({col},{row}) outside {width}x{height}"
            )));
        }
        Ok(Self { col, row })
    }

    pub fn col(&self) -> u32 {
        self.col
    }

    pub fn row(&self) -> u32 {
        self.row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_dimensions() {
        assert!(Image::from_samples(0, 1, 1, vec![]).is_err());
        assert!(Image::from_samples(1, 0, 1, vec![]).is_err());
    }

    #[test]
    fn rejects_bad_channel_count() {
        assert!(Image::from_samples(1, 1, 2, vec![0, 0]).is_err());
        assert!(Image::from_samples(1, 1, 4, vec![0; 4]).is_err());
    }

    #[test]
    fn rejects_sample_length_mismatch() {
        assert!(Image::from_samples(2, 2, 3, vec![0; 11]).is_err());
        assert!(Image::from_samples(2, 2, 3, vec![0; 12]).is_ok());
    }

    #[test]
    fn sample_addressing_is_row_major_interleaved() {
        let img = Image::from_samples(2, 2, 3, (0..12).collect()).unwrap();
        assert_eq!(img.sample(0, 0, 0), 0);
        assert_eq!(img.sample(1, 0, 2), 5);
        assert_eq!(img.sample(0, 1, 0), 6);
        assert_eq!(img.sample(1, 1, 1), 10);
    }

    #[test]
    fn pixel_coord_bounds() {
        assert!(PixelCoord::new(4, 0, 5, 5).is_ok());
        assert!(PixelCoord::new(5, 0, 5, 5).is_err());
        assert!(PixelCoord::new(0, 5, 5, 5).is_err());
    }
}
