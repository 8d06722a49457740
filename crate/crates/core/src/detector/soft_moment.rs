//! Analytic reference detector with closed-form input gradients.
//!
//! Pipeline per image:
//!
//! 1. intensity `G` = channel mean, smoothed to `Ĝ` with a Gaussian of std
//!    `smooth_sigma`;
//! 2. foreground `Ĝ > τ`, 8-connected components, components smaller than
//!    `min_area` dropped;
//! 3. each component gets a window (its bounding box dilated by
//!    `window_margin`, clipped to the image) and weights `u = max(G, 0)^γ`
//!    over that window;
//! 4. every box edge is a [`soft_extent`] of the window's pixel edges,
//!    pushed outward by the soft-min bias `1 / (e^β − 1)`;
//! 5. score `= sigmoid(k · (mean G over the component − τ))`.
//!
//! Components and windows are the discrete structure. Gradients hold that
//! structure fixed and differentiate the five smooth outputs exactly.

use serde::{Deserialize, Serialize};

use super::{Capabilities, Detection, DetectorAdapter, SaliencyTarget, TargetHandle};
use crate::error::{Error, Result};
use crate::filter::{gaussian_kernel, gaussian_smooth};
use crate::geometry::BBox;
use crate::image::{GradientImage, Image};

pub const SOFT_MOMENT_NAME: &str = "soft-moment";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftMomentConfig {
    /// Std (px) of the smoothing applied before thresholding.
    pub smooth_sigma: f64,
    /// τ: foreground threshold on smoothed intensity.
    pub intensity_threshold: f64,
    /// Minimum component area in pixels.
    pub min_area: usize,
    pub window_margin: usize,
    /// γ: weights are `max(G, 0)^γ`.
    pub sharpen_exponent: f64,
    /// β (px⁻¹) of the soft extents.
    pub extent_temperature: f64,
    /// k: sigmoid gain of the score.
    pub score_gain: f64,
}

impl Default for SoftMomentConfig {
    fn default() -> Self {
        Self {
            smooth_sigma: 1.0,
            intensity_threshold: 0.5,
            min_area: 9,
            window_margin: 3,
            sharpen_exponent: 2.0,
            extent_temperature: 0.5,
            score_gain: 10.0,
        }
    }
}

impl SoftMomentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("soft-moment: {what}")));
        if !(self.smooth_sigma >= 0.0) {
            return bad("smooth_sigma must be >= 0");
        }
        if !(self.intensity_threshold > 0.0 && self.intensity_threshold < 1.0) {
            return bad("intensity_threshold must be in (0, 1)");
        }
        if self.min_area < 1 {
            return bad("min_area must be >= 1");
        }
        if !(self.extent_temperature > 0.0) {
            return bad("extent_temperature must be > 0");
        }
        if !(self.sharpen_exponent >= 1.0) {
            return bad("sharpen_exponent must be >= 1");
        }
        if !(self.score_gain > 0.0) {
            return bad("score_gain must be > 0");
        }
        Ok(())
    }

    /// Outward correction added to each soft edge: the mean offset of a soft
    /// minimum over a semi-infinite run of equal weights.
    pub fn edge_bias(&self) -> f64 {
        1.0 / self.extent_temperature.exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtentDirection {
    Min,
    Max,
}

/// Temperature-weighted soft minimum or maximum of weighted positions.
///
/// Each position is weighted by `weight · exp(∓β · x)` (minus for `Min`),
/// normalized; the result always lies in `[min x, max x]` over positive
/// weights.
pub fn soft_extent(coords: &[(f64, f64)], beta: f64, direction: ExtentDirection) -> Result<f64> {
    let positions: Vec<f64> = coords.iter().map(|c| c.0).collect();
    let weights: Vec<f64> = coords.iter().map(|c| c.1).collect();
    SoftExtent::evaluate(&positions, &weights, beta, direction).map(|e| e.value)
}

/// Soft extent together with `∂value/∂weight_p`.
struct SoftExtent {
    value: f64,
    sensitivity: Vec<f64>,
}

impl SoftExtent {
    fn evaluate(
        positions: &[f64],
        weights: &[f64],
        beta: f64,
        direction: ExtentDirection,
    ) -> Result<Self> {
        let sign = match direction {
            ExtentDirection::Min => -1.0,
            ExtentDirection::Max => 1.0,
        };
        // Reference at the extreme positive-weight position keeps every
        // exponent of a contributing term <= 0.
        let reference = positions
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&x, _)| sign * x)
            .fold(f64::NEG_INFINITY, f64::max);
        if reference == f64::NEG_INFINITY {
            return Err(Error::DegenerateWeights);
        }
        let tilts: Vec<f64> = positions
            .iter()
            .map(|&x| (beta * (sign * x - reference)).exp())
            .collect();
        let mut norm = 0.0;
        let mut moment = 0.0;
        for ((&x, &w), &t) in positions.iter().zip(weights).zip(&tilts) {
            norm += w * t;
            moment += w * t * x;
        }
        let value = moment / norm;
        let sensitivity = positions
            .iter()
            .zip(&tilts)
            .map(|(&x, &t)| t * (x - value) / norm)
            .collect();
        Ok(Self { value, sensitivity })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Window {
    row0: usize,
    row1: usize,
    col0: usize,
    col1: usize,
}

impl Window {
    fn contains(&self, row: usize, col: usize) -> bool {
        (self.row0..self.row1).contains(&row) && (self.col0..self.col1).contains(&col)
    }

    fn indices(&self, width: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (self.row0..self.row1)
            .flat_map(move |r| (self.col0..self.col1).map(move |c| (r, c, r * width + c)))
    }
}

#[derive(Debug, Clone)]
struct Blob {
    pixels: Vec<usize>,
    window: Window,
}

/// Discrete structure of one forward pass.
struct Structure {
    height: usize,
    width: usize,
    intensity: Vec<f64>,
    blobs: Vec<Blob>,
}

/// Smooth outputs of one blob plus their sensitivities.
struct BlobOutputs {
    edges: [(SoftExtent, f64, bool); 4],
    score: f64,
    weight_slope: Vec<(usize, f64)>,
}

/// The reference soft-moment blob detector. Stateless and reentrant.
#[derive(Debug, Clone, Default)]
pub struct SoftMomentDetector {
    config: SoftMomentConfig,
}

impl SoftMomentDetector {
    pub fn new(config: SoftMomentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &SoftMomentConfig {
        &self.config
    }

    /// The smoothed intensity `Ĝ` the foreground threshold is applied to.
    pub fn smoothed_intensity(&self, image: &Image) -> Vec<f64> {
        gaussian_smooth(
            &image.intensity(),
            image.height(),
            image.width(),
            self.config.smooth_sigma,
        )
    }

    /// True when perturbing pixel `(row, col)` by up to `margin / 10` in
    /// intensity cannot change the discrete structure: every smoothed value
    /// within the smoothing support of the pixel is at least `margin` away
    /// from the threshold.
    pub fn structurally_stable(&self, smoothed: &[f64], width: usize, row: usize, col: usize, margin: f64) -> bool {
        let height = smoothed.len() / width;
        let radius = gaussian_kernel(self.config.smooth_sigma).len() / 2;
        let tau = self.config.intensity_threshold;
        let (r0, r1) = (row.saturating_sub(radius), (row + radius + 1).min(height));
        let (c0, c1) = (col.saturating_sub(radius), (col + radius + 1).min(width));
        (r0..r1).all(|r| (c0..c1).all(|c| (smoothed[r * width + c] - tau).abs() >= margin))
    }

    fn structure(&self, image: &Image) -> Structure {
        let (height, width) = image.dims();
        let intensity = image.intensity();
        let smoothed = gaussian_smooth(&intensity, height, width, self.config.smooth_sigma);
        let tau = self.config.intensity_threshold;
        let foreground: Vec<bool> = smoothed.iter().map(|&v| v > tau).collect();

        let margin = self.config.window_margin;
        let blobs = components(&foreground, height, width)
            .into_iter()
            .filter(|pixels| pixels.len() >= self.config.min_area)
            .map(|pixels| {
                let (mut r0, mut r1, mut c0, mut c1) = (usize::MAX, 0, usize::MAX, 0);
                for &p in &pixels {
                    let (r, c) = (p / width, p % width);
                    r0 = r0.min(r);
                    r1 = r1.max(r + 1);
                    c0 = c0.min(c);
                    c1 = c1.max(c + 1);
                }
                let window = Window {
                    row0: r0.saturating_sub(margin),
                    row1: (r1 + margin).min(height),
                    col0: c0.saturating_sub(margin),
                    col1: (c1 + margin).min(width),
                };
                Blob { pixels, window }
            })
            .collect();

        Structure {
            height,
            width,
            intensity,
            blobs,
        }
    }

    fn outputs(&self, s: &Structure, blob: &Blob) -> Result<BlobOutputs> {
        let cfg = &self.config;
        let gamma = cfg.sharpen_exponent;
        let beta = cfg.extent_temperature;
        let bias = cfg.edge_bias();

        let mut idx = Vec::new();
        let mut weights = Vec::new();
        let mut slopes = Vec::new();
        let mut left = Vec::new();
        let mut top = Vec::new();
        for (r, c, p) in blob.window.indices(s.width) {
            let g = s.intensity[p].max(0.0);
            idx.push(p);
            weights.push(g.powf(gamma));
            slopes.push(if g > 0.0 { gamma * g.powf(gamma - 1.0) } else { 0.0 });
            left.push(c as f64);
            top.push(r as f64);
        }
        let right: Vec<f64> = left.iter().map(|x| x + 1.0).collect();
        let bottom: Vec<f64> = top.iter().map(|y| y + 1.0).collect();

        let (w, h) = (s.width as f64, s.height as f64);
        let edge = |pos: &[f64], dir, offset: f64, limit: f64| -> Result<(SoftExtent, f64, bool)> {
            let e = SoftExtent::evaluate(pos, &weights, beta, dir)?;
            let raw = e.value + offset;
            let clipped = !(0.0..=limit).contains(&raw);
            Ok((e, raw.clamp(0.0, limit), clipped))
        };
        let edges = [
            edge(&left, ExtentDirection::Min, -bias, w)?,
            edge(&top, ExtentDirection::Min, -bias, h)?,
            edge(&right, ExtentDirection::Max, bias, w)?,
            edge(&bottom, ExtentDirection::Max, bias, h)?,
        ];

        let mean = blob.pixels.iter().map(|&p| s.intensity[p]).sum::<f64>() / blob.pixels.len() as f64;
        let score = sigmoid(cfg.score_gain * (mean - cfg.intensity_threshold));

        Ok(BlobOutputs {
            edges,
            score,
            weight_slope: idx.into_iter().zip(slopes).collect(),
        })
    }

    fn pass_id(image: &Image) -> u64 {
        image.fingerprint()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// 8-connected components of a boolean grid, in raster order of their first pixel.
fn components(mask: &[bool], height: usize, width: usize) -> Vec<Vec<usize>> {
    let mut label = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] {
            continue;
        }
        let mut pixels = Vec::new();
        label[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            pixels.push(p);
            let (r, c) = ((p / width) as i64, (p % width) as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= height as i64 || nc >= width as i64 {
                        continue;
                    }
                    let q = nr as usize * width + nc as usize;
                    if mask[q] && !label[q] {
                        label[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        pixels.sort_unstable();
        out.push(pixels);
    }
    out
}

impl DetectorAdapter for SoftMomentDetector {
    fn name(&self) -> &str {
        SOFT_MOMENT_NAME
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            reentrant_gradients: true,
        }
    }

    fn detect(&self, image: &Image) -> Result<Vec<Detection>> {
        let s = self.structure(image);
        let pass = Self::pass_id(image);
        let mut dets = Vec::with_capacity(s.blobs.len());
        for (index, blob) in s.blobs.iter().enumerate() {
            let out = match self.outputs(&s, blob) {
                Ok(o) => o,
                Err(Error::DegenerateWeights) => continue,
                Err(e) => return Err(e),
            };
            let [xmin, ymin, xmax, ymax] = [&out.edges[0], &out.edges[1], &out.edges[2], &out.edges[3]].map(|e| e.1);
            dets.push(Detection {
                id: index,
                bbox: BBox {
                    xmin,
                    ymin,
                    xmax,
                    ymax,
                },
                class_id: 0,
                score: out.score,
                handle: TargetHandle { pass, index },
            });
        }
        Ok(dets)
    }

    fn input_gradient(
        &self,
        image: &Image,
        handle: &TargetHandle,
        target: SaliencyTarget,
    ) -> Result<GradientImage> {
        if handle.pass != Self::pass_id(image) {
            return Err(Error::InvalidHandle);
        }
        let s = self.structure(image);
        let blob = s.blobs.get(handle.index).ok_or(Error::InvalidHandle)?;
        let out = self.outputs(&s, blob).map_err(|_| Error::InvalidHandle)?;

        let channels = image.channels();
        let per_channel = 1.0 / channels as f64;
        // ∂scalar/∂G per window pixel (or component pixel for the score).
        let mut d_intensity = vec![0.0; s.width * s.height];
        match target {
            SaliencyTarget::Cls => {
                let slope = out.score * (1.0 - out.score) * self.config.score_gain
                    / blob.pixels.len() as f64;
                for &p in &blob.pixels {
                    d_intensity[p] = slope;
                }
            }
            _ => {
                let k = match target {
                    SaliencyTarget::Xmin => 0,
                    SaliencyTarget::Ymin => 1,
                    SaliencyTarget::Xmax => 2,
                    SaliencyTarget::Ymax => 3,
                    SaliencyTarget::Cls => unreachable!(),
                };
                let (extent, _, clipped) = &out.edges[k];
                if !clipped {
                    for ((p, du), dv) in out.weight_slope.iter().zip(&extent.sensitivity) {
                        d_intensity[*p] = dv * du;
                    }
                }
            }
        }
        debug_assert!(d_intensity
            .iter()
            .enumerate()
            .all(|(p, &v)| v == 0.0 || blob.window.contains(p / s.width, p % s.width)));

        let values = d_intensity
            .iter()
            .flat_map(|&d| std::iter::repeat_n(d * per_channel, channels))
            .collect();
        GradientImage::from_values(s.height, s.width, channels, values)
    }
}
