//! Pixel containers shared by detectors and the saliency engine.
//!
//! [`Image`] stores `height × width × channels` values in row-major,
//! channel-interleaved order. Images read from disk are guaranteed to lie in
//! `[0, 1]`; noise-perturbed copies produced during SmoothGrad may leave that
//! range, so only finiteness is enforced for those.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};

pub const MIN_SIDE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Builds an image whose values must be finite and within `[0, 1]`.
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        let img = Self::unbounded(height, width, channels, pixels)?;
        if let Some(v) = img.pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(img)
    }

    /// Builds an image that only has to be finite. Used for noisy copies.
    pub fn unbounded(
        height: usize,
        width: usize,
        channels: usize,
        pixels: Vec<f64>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if height < MIN_SIDE || width < MIN_SIDE {
            return Err(Error::InvalidImage(format!(
                "image must be at least {MIN_SIDE}x{MIN_SIDE}, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width * channels {
            return Err(Error::InvalidImage(format!(
                "expected {} values, got {}",
                height * width * channels,
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite pixel value".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.pixels[(row * self.width + col) * self.channels + ch]
    }

    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        self.pixels[(row * self.width + col) * self.channels + ch] = value;
    }

    /// Returns a copy with every value replaced by `f(value)`; the result is
    /// only required to be finite.
    pub fn map_unbounded(&self, f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::unbounded(
            self.height,
            self.width,
            self.channels,
            self.pixels.iter().copied().map(f).collect(),
        )
    }

    /// Per-pixel channel mean, row-major `height × width`.
    pub fn intensity(&self) -> Vec<f64> {
        let c = self.channels as f64;
        self.pixels
            .chunks_exact(self.channels)
            .map(|px| px.iter().sum::<f64>() / c)
            .collect()
    }

    /// A stable 64-bit content fingerprint (FNV-1a over shape and pixel bits).
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |word: u64| {
            for b in word.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(self.height as u64);
        feed(self.width as u64);
        feed(self.channels as u64);
        for v in &self.pixels {
            feed(v.to_bits());
        }
        h
    }

    /// Reads an 8-bit PNG (grayscale or RGB), mapping each value `v` to `v / 255`.
    pub fn read_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let decoded = image::open(path).map_err(|e| Error::png(path, e))?;
        let (w, h) = (decoded.width(), decoded.height());
        let (channels, raw) = match decoded {
            DynamicImage::ImageLuma8(buf) => (1, buf.into_raw()),
            DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) => {
                (1, decoded.to_luma8().into_raw())
            }
            other => (3, other.to_rgb8().into_raw()),
        };
        let pixels = raw.into_iter().map(|v| f64::from(v) / 255.0).collect();
        Self::new(h as usize, w as usize, channels, pixels)
    }

    /// Writes an 8-bit PNG, rounding `clamp(v, 0, 1) * 255`.
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.pixels.iter().map(|&v| to_u8(v)).collect();
        let (w, h) = (self.width as u32, self.height as u32);
        let result = if self.channels == 1 {
            GrayImage::from_raw(w, h, bytes)
                .expect("buffer sized from dims")
                .save(path)
        } else {
            RgbImage::from_raw(w, h, bytes)
                .expect("buffer sized from dims")
                .save(path)
        };
        result.map_err(|e| Error::png(path, e))
    }

    /// Gray or RGB 8-bit buffer for rendering.
    pub fn to_rgb8(&self) -> ImageBuffer<Rgb<u8>, Vec<u8>> {
        let mut out = RgbImage::new(self.width as u32, self.height as u32);
        for r in 0..self.height {
            for c in 0..self.width {
                let px = if self.channels == 1 {
                    let v = to_u8(self.get(r, c, 0));
                    [v, v, v]
                } else {
                    [
                        to_u8(self.get(r, c, 0)),
                        to_u8(self.get(r, c, 1)),
                        to_u8(self.get(r, c, 2)),
                    ]
                };
                out.put_pixel(c as u32, r as u32, Rgb(px));
            }
        }
        out
    }

    pub fn to_gray8(&self) -> ImageBuffer<Luma<u8>, Vec<u8>> {
        let g = self.intensity();
        GrayImage::from_fn(self.width as u32, self.height as u32, |c, r| {
            Luma([to_u8(g[r as usize * self.width + c as usize])])
        })
    }
}

pub(crate) fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Signed input gradient with the same shape as its source image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientImage {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f64>,
}

impl GradientImage {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            values: vec![0.0; height * width * channels],
        }
    }

    pub fn from_values(
        height: usize,
        width: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != height * width * channels {
            return Err(Error::InvalidImage(format!(
                "gradient expects {} values, got {}",
                height * width * channels,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite gradient value".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    pub fn like(image: &Image) -> Self {
        Self::zeros(image.height(), image.width(), image.channels())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.values[(row * self.width + col) * self.channels + ch]
    }

    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        self.values[(row * self.width + col) * self.channels + ch] = value;
    }
}
