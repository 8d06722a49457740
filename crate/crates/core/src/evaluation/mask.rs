use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter;
use crate::saliency::SaliencyMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![true; height * width],
        }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::ShapeMismatch((height, width), (bits.len(), 1)));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let bits = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self {
            height,
            width,
            bits,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn check_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::ShapeMismatch(self.dims(), other.dims()));
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> Result<usize> {
        self.check_shape(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count())
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_shape(other)?;
        Ok(Self {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_shape(other)?;
        Ok(Self {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinarizeConfig {
    /// Std (px) of the smoothing applied before thresholding.
    pub filter_sigma: f64,
    /// Foreground is `smoothed > threshold_factor · max(smoothed)`.
    pub threshold_factor: f64,
}

impl Default for BinarizeConfig {
    fn default() -> Self {
        Self {
            filter_sigma: 2.0,
            threshold_factor: 0.32,
        }
    }
}

impl BinarizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.filter_sigma >= 0.0 && self.filter_sigma.is_finite()) {
            return Err(Error::InvalidConfig("filter_sigma must be >= 0".into()));
        }
        if !(self.threshold_factor > 0.0 && self.threshold_factor < 1.0) {
            return Err(Error::InvalidConfig(
                "threshold_factor must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binarized {
    pub mask: BinaryMask,
    /// The smoothed map had no positive value; `mask` is empty.
    pub degenerate: bool,
}

/// Separable Gaussian smoothing of a saliency map (radius `ceil(3σ)`,
/// reflect padding). `sigma = 0` is the identity.
pub fn gaussian_smooth(map: &SaliencyMap, sigma: f64) -> SaliencyMap {
    let (h, w) = map.dims();
    let values = filter::gaussian_smooth(map.values(), h, w, sigma)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    SaliencyMap::from_raw(h, w, values)
}

pub fn binarize(map: &SaliencyMap, cfg: &BinarizeConfig) -> Binarized {
    let (h, w) = map.dims();
    let smoothed = gaussian_smooth(map, cfg.filter_sigma);
    let peak = smoothed.max();
    if peak <= 0.0 {
        return Binarized {
            mask: BinaryMask::empty(h, w),
            degenerate: true,
        };
    }
    let threshold = cfg.threshold_factor * peak;
    let bits = smoothed.values().iter().map(|&v| v > threshold).collect();
    Binarized {
        mask: BinaryMask {
            height: h,
            width: w,
            bits,
        },
        degenerate: false,
    }
}

/// Intersection over foreground: `|foreground ∩ region| / |foreground|`.
pub fn iof(foreground: &BinaryMask, region: &BinaryMask) -> Result<f64> {
    let inter = foreground.intersection_count(region)?;
    let total = foreground.count();
    if total == 0 {
        return Err(Error::EmptySaliencyMask);
    }
    Ok(inter as f64 / total as f64)
}
