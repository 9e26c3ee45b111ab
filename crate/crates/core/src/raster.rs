//! In-memory 8-bit raster images and sampling.
//!
//! Coordinate convention used across the crate: pixel `(i, j)` covers the
//! unit square `[i, i+1) x [j, j+1)` of the continuous image plane and is
//! sampled at its center `(i+0.5, j+0.5)`. Geometry (detected corners,
//! homographies, intrinsics) lives in those continuous coordinates.
//! [`bilinear_sample`] is the one exception: it addresses the sample
//! lattice directly, so integer arguments return stored pixel values.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit image, grayscale (1 channel) or RGB (3 channels).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        Self::from_vec(width, height, channels, vec![0; width * height * channels])
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "empty dimensions {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!(
                "{channels} channels, expected 1 or 3"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidRaster(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Pixel value with out-of-range coordinates reported as 0 (black).
    #[inline]
    pub fn get_or_black(&self, x: i64, y: i64, c: usize) -> u8 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0
        } else {
            self.get(x as usize, y as usize, c)
        }
    }

    /// Single-channel luma copy (ITU-R BT.601 weights 0.299/0.587/0.114).
    pub fn to_gray(&self) -> RasterImage {
        if self.channels == 1 {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.width * self.height);
        for px in self.data.chunks_exact(3) {
            let v = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data: out,
        }
    }

    /// Interpolate one channel on the sample lattice (integer `x` hits
    /// stored samples exactly). Outside `[0, w-1] x [0, h-1]` this is 0.
    #[inline]
    pub fn bilinear_channel(&self, x: f64, y: f64, c: usize) -> f64 {
        let wm = (self.width - 1) as f64;
        let hm = (self.height - 1) as f64;
        if !(x >= 0.0 && y >= 0.0 && x <= wm && y <= hm) {
            return 0.0;
        }
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as usize;
        let y0 = y0 as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let p00 = self.get(x0, y0, c) as f64;
        let p10 = self.get(x1, y0, c) as f64;
        let p01 = self.get(x0, y1, c) as f64;
        let p11 = self.get(x1, y1, c) as f64;
        let top = p00 + fx * (p10 - p00);
        let bot = p01 + fx * (p11 - p01);
        top + fy * (bot - top)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let dynamic = image::load_from_memory(bytes)?;
        Ok(Self::from_dynamic(dynamic))
    }

    fn from_dynamic(dynamic: image::DynamicImage) -> Self {
        match dynamic {
            image::DynamicImage::ImageLuma8(g) => {
                let (w, h) = (g.width() as usize, g.height() as usize);
                RasterImage {
                    width: w,
                    height: h,
                    channels: 1,
                    data: g.into_raw(),
                }
            }
            other => {
                let rgb = other.into_rgb8();
                let (w, h) = (rgb.width() as usize, rgb.height() as usize);
                RasterImage {
                    width: w,
                    height: h,
                    channels: 3,
                    data: rgb.into_raw(),
                }
            }
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            _ => image::ExtendedColorType::Rgb8,
        };
        image::save_buffer_with_format(
            path,
            &self.data,
            self.width as u32,
            self.height as u32,
            color,
            image::ImageFormat::Png,
        )?;
        Ok(())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            _ => image::ExtendedColorType::Rgb8,
        };
        image::write_buffer_with_format(
            &mut out,
            &self.data,
            self.width as u32,
            self.height as u32,
            color,
            image::ImageFormat::Png,
        )?;
        Ok(out.into_inner())
    }

    /// Baseline JPEG encoding, used by test fixtures that exercise the
    /// EXIF path.
    pub fn encode_jpeg(&self, quality: u8) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        let color = match self.channels {
            1 => image::ExtendedColorType::L8,
            _ => image::ExtendedColorType::Rgb8,
        };
        let mut encoder = image::codecs::jpeg::JpegEncoder::new_with_quality(&mut out, quality);
        encoder.encode(&self.data, self.width as u32, self.height as u32, color)?;
        Ok(out.into_inner())
    }
}

/// Bilinear interpolation of all channels at lattice coordinates
/// `(x, y)`; integer coordinates return the stored pixel exactly and
/// anything outside `[0, w-1] x [0, h-1]` is black. Only the first
/// `image.channels()` entries of the result are meaningful.
pub fn bilinear_sample(image: &RasterImage, x: f64, y: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate().take(image.channels()) {
        *slot = image.bilinear_channel(x, y, c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(width: usize, height: usize, data: Vec<u8>) -> RasterImage {
        RasterImage::from_vec(width, height, 1, data).unwrap()
    }

    #[test]
    fn bilinear_lattice_points_are_exact() {
        let img = gray(3, 2, vec![10, 20, 30, 40, 50, 60]);
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(
                    bilinear_sample(&img, x as f64, y as f64)[0],
                    img.get(x, y, 0) as f64
                );
            }
        }
    }

    #[test]
    fn bilinear_midpoint_is_average() {
        let img = gray(2, 1, vec![0, 100]);
        assert_eq!(bilinear_sample(&img, 0.5, 0.0)[0], 50.0);
    }

    #[test]
    fn bilinear_out_of_bounds_is_black() {
        let img = gray(2, 2, vec![255; 4]);
        assert_eq!(bilinear_sample(&img, -1.0, -1.0)[0], 0.0);
        assert_eq!(bilinear_sample(&img, 1.1, 0.0)[0], 0.0);
        assert_eq!(bilinear_sample(&img, 0.0, 1.0 + 1e-9)[0], 0.0);
        // The far lattice edge itself is still inside the domain.
        assert_eq!(bilinear_sample(&img, 1.0, 1.0)[0], 255.0);
    }

    #[test]
    fn raster_shape_is_validated() {
        assert!(RasterImage::from_vec(2, 2, 1, vec![0; 3]).is_err());
        assert!(RasterImage::from_vec(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::from_vec(0, 2, 1, vec![]).is_err());
    }

    #[test]
    fn gray_conversion_uses_luma_weights() {
        let img = RasterImage::from_vec(1, 1, 3, vec![255, 0, 0]).unwrap();
        assert_eq!(img.to_gray().get(0, 0, 0), 76); // round(0.299*255)
    }
}
