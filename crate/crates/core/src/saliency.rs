//! Class-saliency extraction and per-detection SmoothGrad.
//!
//! A single-pass saliency map is `max_c |∂s/∂x(i, j, c)|`. SmoothGrad averages
//! that map over `n` copies of the input perturbed with `N(0, σ²)` noise. For
//! detectors the object has to be re-identified in every noisy pass; each
//! clean-pass detection is aligned to the noisy detections by box IOU and class,
//! and only matched passes contribute to the average.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{detect, input_gradient, Detection, DetectorAdapter, SaliencyTarget};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::image::{GradientImage, Image};

/// Non-negative `height × width` map.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "saliency map expects {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidImage(
                "saliency values must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            values: vec![0.0; height * width],
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every value by `factor` (must be `>= 0`).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Mass-weighted `(x, y)` centroid in pixel-center coordinates.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut mass = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for r in 0..self.height {
            for c in 0..self.width {
                let v = self.get(r, c);
                mass += v;
                sx += v * (c as f64 + 0.5);
                sy += v * (r as f64 + 0.5);
            }
        }
        (mass > 0.0).then(|| (sx / mass, sy / mass))
    }

    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Self {
            height,
            width,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothGradConfig {
    pub n_samples: usize,
    /// Noise std as a fraction of the pixel dynamic range (`[0, 1]`).
    pub sigma: f64,
    /// Minimum box IOU for a noisy detection to count as the same object.
    pub align_iou: f64,
    /// A target fails when fewer than this fraction of passes align.
    pub min_match_fraction: f64,
    pub seed: u64,
    /// Compute samples on the rayon pool when the adapter is reentrant.
    pub parallel: bool,
}

impl Default for SmoothGradConfig {
    fn default() -> Self {
        Self {
            n_samples: 20,
            sigma: 0.05,
            align_iou: 0.7,
            min_match_fraction: 0.5,
            seed: 0,
            parallel: true,
        }
    }
}

impl SmoothGradConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("sigma must be >= 0".into()));
        }
        if !(self.align_iou > 0.0 && self.align_iou <= 1.0) {
            return Err(Error::InvalidConfig("align_iou must be in (0, 1]".into()));
        }
        if !(self.min_match_fraction > 0.0 && self.min_match_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "min_match_fraction must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// `M(i, j) = max_c |grad(i, j, c)|`.
pub fn saliency_from_gradient(grad: &GradientImage) -> SaliencyMap {
    let values = grad
        .values()
        .chunks_exact(grad.channels())
        .map(|px| px.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        .collect();
    SaliencyMap::from_raw(grad.height(), grad.width(), values)
}

/// Adds independent `N(0, σ²)` noise to every value. The result is not clipped.
pub fn add_noise<R: rand::Rng + ?Sized>(image: &Image, sigma: f64, rng: &mut R) -> Result<Image> {
    if sigma == 0.0 {
        return Ok(image.clone());
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise sigma {sigma}: {e}")))?;
    image.map_unbounded(|v| v + normal.sample(rng))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the noise stream for sample `index`, a fixed function of the run
/// seed, the image fingerprint and the sample index.
pub fn sample_seed(seed: u64, image_id: u64, index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ image_id) ^ index as u64)
}

pub fn sample_rng(seed: u64, image_id: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sample_seed(seed, image_id, index))
}

/// Highest-IOU candidate of the same class with IOU `>= align_iou`.
pub fn align_detection<'a>(
    reference: &Detection,
    candidates: &'a [Detection],
    align_iou: f64,
) -> Option<&'a Detection> {
    let mut best: Option<(f64, &Detection)> = None;
    for c in candidates.iter().filter(|c| c.class_id == reference.class_id) {
        let v = iou(&reference.bbox, &c.bbox);
        if v >= align_iou && best.is_none_or(|(b, _)| v > b) {
            best = Some((v, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Why a target produced no averaged map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentFailure {
    pub matched_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSaliency {
    pub target: SaliencyTarget,
    pub matched_samples: usize,
    pub map: std::result::Result<SaliencyMap, AlignmentFailure>,
}

/// Averaged maps of one clean-pass detection, one entry per target in
/// [`SaliencyTarget::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSaliency {
    pub detection: Detection,
    pub targets: Vec<TargetSaliency>,
}

impl DetectionSaliency {
    pub fn map(&self, target: SaliencyTarget) -> Option<&SaliencyMap> {
        self.targets
            .iter()
            .find(|t| t.target == target)
            .and_then(|t| t.map.as_ref().ok())
    }

    /// Every target failed alignment.
    pub fn is_empty(&self) -> bool {
        self.targets.iter().all(|t| t.map.is_err())
    }
}

/// Per reference detection: `None` when unmatched, else one map per target.
type SampleMaps = Vec<Option<Vec<SaliencyMap>>>;

fn run_sample(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    image_id: u64,
    references: &[Detection],
    targets: &[SaliencyTarget],
    cfg: &SmoothGradConfig,
    index: usize,
) -> Result<SampleMaps> {
    let mut rng = sample_rng(cfg.seed, image_id, index);
    let noisy = add_noise(image, cfg.sigma, &mut rng)?;
    let candidates = detect(adapter, &noisy)?;
    references
        .iter()
        .map(|r| match align_detection(r, &candidates, cfg.align_iou) {
            None => Ok(None),
            Some(m) => targets
                .iter()
                .map(|&t| input_gradient(adapter, &noisy, m, t).map(|g| saliency_from_gradient(&g)))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        })
        .collect()
}

fn smoothgrad_many(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    references: &[Detection],
    targets: &[SaliencyTarget],
    cfg: &SmoothGradConfig,
) -> Result<Vec<(usize, Vec<SaliencyMap>)>> {
    cfg.validate()?;
    let image_id = image.fingerprint();
    let one = |i: usize| run_sample(adapter, image, image_id, references, targets, cfg, i);
    let samples: Vec<SampleMaps> = if cfg.parallel && adapter.capabilities().reentrant_gradients {
        (0..cfg.n_samples).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..cfg.n_samples).map(one).collect::<Result<_>>()?
    };

    let (h, w) = image.dims();
    let mut sums: Vec<(usize, Vec<Vec<f64>>)> = references
        .iter()
        .map(|_| (0, vec![vec![0.0; h * w]; targets.len()]))
        .collect();
    // Index order keeps the floating-point summation independent of scheduling.
    for sample in samples {
        for (acc, maps) in sums.iter_mut().zip(sample) {
            let Some(maps) = maps else { continue };
            acc.0 += 1;
            for (sum, map) in acc.1.iter_mut().zip(maps) {
                for (s, v) in sum.iter_mut().zip(map.values()) {
                    *s += v;
                }
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|(matched, per_target)| {
            let maps = per_target
                .into_iter()
                .map(|mut sum| {
                    if matched > 0 {
                        let n = matched as f64;
                        sum.iter_mut().for_each(|s| *s /= n);
                    }
                    SaliencyMap::from_raw(h, w, sum)
                })
                .collect();
            (matched, maps)
        })
        .collect())
}

fn check_fraction(matched: usize, cfg: &SmoothGradConfig) -> std::result::Result<(), AlignmentFailure> {
    let fraction = matched as f64 / cfg.n_samples as f64;
    if matched == 0 || fraction < cfg.min_match_fraction {
        Err(AlignmentFailure {
            matched_fraction: fraction,
        })
    } else {
        Ok(())
    }
}

/// SmoothGrad map of one target of one clean-pass detection. Returns the map
/// and the number of noisy passes in which the detection was re-identified.
pub fn smoothgrad_map(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    detection: &Detection,
    target: SaliencyTarget,
    cfg: &SmoothGradConfig,
) -> Result<(SaliencyMap, usize)> {
    let (matched, mut maps) = smoothgrad_many(
        adapter,
        image,
        std::slice::from_ref(detection),
        &[target],
        cfg,
    )?
    .remove(0);
    check_fraction(matched, cfg).map_err(|f| Error::InsufficientAlignment {
        fraction: f.matched_fraction,
        required: cfg.min_match_fraction,
    })?;
    Ok((maps.remove(0), matched))
}

/// All five SmoothGrad maps for the given clean-pass detections. Noisy passes
/// are shared between detections and targets; each map is identical to what
/// [`smoothgrad_map`] returns for it.
pub fn odsmoothgrad_for(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    detections: &[Detection],
    cfg: &SmoothGradConfig,
) -> Result<Vec<DetectionSaliency>> {
    if detections.is_empty() {
        cfg.validate()?;
        return Ok(Vec::new());
    }
    let results = smoothgrad_many(adapter, image, detections, &SaliencyTarget::ALL, cfg)?;
    Ok(detections
        .iter()
        .zip(results)
        .map(|(d, (matched, maps))| {
            let status = check_fraction(matched, cfg);
            DetectionSaliency {
                detection: d.clone(),
                targets: SaliencyTarget::ALL
                    .into_iter()
                    .zip(maps)
                    .map(|(target, map)| TargetSaliency {
                        target,
                        matched_samples: matched,
                        map: status.clone().map(|_| map),
                    })
                    .collect(),
            }
        })
        .collect())
}

/// Clean-pass detection followed by five SmoothGrad maps per detection.
pub fn odsmoothgrad(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    cfg: &SmoothGradConfig,
) -> Result<Vec<DetectionSaliency>> {
    let detections = detect(adapter, image)?;
    odsmoothgrad_for(adapter, image, &detections, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{Capabilities, TargetHandle};
    use crate::geometry::BBox;

    fn det(id: usize, b: (f64, f64, f64, f64), class_id: u32) -> Detection {
        Detection {
            id,
            bbox: BBox::new(b.0, b.1, b.2, b.3).unwrap(),
            class_id,
            score: 0.95,
            handle: TargetHandle { pass: 0, index: id },
        }
    }

    #[test]
    fn saliency_abs_and_channel_max() {
        let g = GradientImage::from_values(1, 2, 1, vec![0.2, -0.5]).unwrap();
        assert_eq!(saliency_from_gradient(&g).values(), &[0.2, 0.5]);
        let g = GradientImage::from_values(1, 1, 3, vec![0.1, -0.4, 0.2]).unwrap();
        assert_eq!(saliency_from_gradient(&g).values(), &[0.4]);
        let g = GradientImage::zeros(3, 4, 3);
        assert!(saliency_from_gradient(&g).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_free_is_identity_and_seeded_noise_repeats() {
        let img = Image::new(64, 64, 1, (0..4096).map(|i| (i % 97) as f64 / 96.0).collect()).unwrap();
        let mut rng = sample_rng(1, 2, 3);
        let same = add_noise(&img, 0.0, &mut rng).unwrap();
        assert!(same.pixels().iter().zip(img.pixels()).all(|(a, b)| a.to_bits() == b.to_bits()));

        let a = add_noise(&img, 0.05, &mut sample_rng(9, img.fingerprint(), 0)).unwrap();
        let b = add_noise(&img, 0.05, &mut sample_rng(9, img.fingerprint(), 0)).unwrap();
        assert_eq!(a, b);
        let diffs: Vec<f64> = a.pixels().iter().zip(img.pixels()).map(|(x, y)| x - y).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let std = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64).sqrt();
        assert!((0.045..=0.055).contains(&std), "std {std}");
        // unclipped
        assert!(a.pixels().iter().any(|&v| !(0.0..=1.0).contains(&v)));
    }

    #[test]
    fn sample_seeds_differ_by_index_and_image() {
        let s: Vec<u64> = (0..20).map(|i| sample_seed(42, 7, i)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 20);
        assert_ne!(sample_seed(42, 7, 0), sample_seed(42, 8, 0));
        assert_ne!(sample_seed(42, 7, 0), sample_seed(43, 7, 0));
        // frozen from an independent splitmix64; splitmix64(0) is the
        // published first output 0xe220a8397b1dcdaf
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
        assert_eq!(sample_seed(0, 0, 0), 0x2382_75bc_38fc_be91);
        assert_eq!(sample_seed(42, 0xdead_beef, 7), 0x1a26_ae6f_8f46_6160);
    }

    #[test]
    fn alignment_rules() {
        let r = det(0, (0.0, 0.0, 10.0, 10.0), 0);
        let same = det(1, (0.0, 0.0, 10.0, 10.0), 0);
        assert_eq!(align_detection(&r, std::slice::from_ref(&same), 0.7), Some(&same));
        let third = det(1, (5.0, 0.0, 15.0, 10.0), 0);
        assert_eq!(align_detection(&r, &[third], 0.7), None);
        // IOU 0.8 vs 0.9
        let a = det(1, (0.0, 0.0, 10.0, 8.0), 0);
        let b = det(2, (0.0, 0.0, 10.0, 9.0), 0);
        assert!((iou(&r.bbox, &a.bbox) - 0.8).abs() < 1e-12);
        assert!((iou(&r.bbox, &b.bbox) - 0.9).abs() < 1e-12);
        assert_eq!(align_detection(&r, &[a.clone(), b.clone()], 0.7).unwrap().id, 2);
        // class flip is not a match
        let flipped = det(3, (0.0, 0.0, 10.0, 10.0), 1);
        assert_eq!(align_detection(&r, &[flipped], 0.7), None);
    }

    struct Nothing;
    impl DetectorAdapter for Nothing {
        fn name(&self) -> &str {
            "nothing"
        }
        fn capabilities(&self) -> Capabilities {
            Capabilities::default()
        }
        fn detect(&self, _: &Image) -> Result<Vec<Detection>> {
            Ok(vec![])
        }
        fn input_gradient(&self, _: &Image, _: &TargetHandle, _: SaliencyTarget) -> Result<GradientImage> {
            Err(Error::InvalidHandle)
        }
    }

    #[test]
    fn no_detections_no_entries() {
        let img = Image::zeros(16, 16, 1).unwrap();
        assert!(odsmoothgrad(&Nothing, &img, &SmoothGradConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn config_validation() {
        let bad = SmoothGradConfig {
            n_samples: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SmoothGradConfig {
            align_iou: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SmoothGradConfig::default().validate().is_ok());
    }
}
