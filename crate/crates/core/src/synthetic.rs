//! Deterministic synthetic scenes: bright axis-aligned rectangles on a dark,
//! lightly noisy background, with exact rectangle polygons as ground truth.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{CocoAnnotation, CocoCategory, CocoDataset, CocoImage, GroundTruthInstance};
use crate::image::Image;

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;
const BORDER: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub n_blobs: usize,
    /// Inclusive range of rectangle side lengths (px).
    pub blob_size: (usize, usize),
    /// Minimum gap (px) between rectangles along at least one axis.
    pub min_separation: usize,
    pub intensity: (f64, f64),
    pub background_noise_std: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            height: 96,
            width: 96,
            n_blobs: 2,
            blob_size: (10, 24),
            min_separation: 12,
            intensity: (0.8, 1.0),
            background_noise_std: 0.02,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("scene: {m}")));
        if !(1..=4).contains(&self.n_blobs) {
            return bad("n_blobs must be in 1..=4");
        }
        let (lo, hi) = self.blob_size;
        if lo < 1 || lo > hi {
            return bad("blob_size must be a non-empty range of positive sizes");
        }
        if hi + 2 * BORDER > self.width.min(self.height) {
            return bad("blobs do not fit inside the image with a 2 px border");
        }
        let (a, b) = self.intensity;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return bad("intensity must be a sub-range of [0, 1]");
        }
        if !(self.background_noise_std >= 0.0) {
            return bad("background_noise_std must be >= 0");
        }
        Ok(())
    }
}

/// Pixel rectangle `[col0, col1) × [row0, row1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    col0: usize,
    row0: usize,
    col1: usize,
    row1: usize,
}

impl Rect {
    fn gap(&self, other: &Rect) -> i64 {
        let gx = (other.col0 as i64 - self.col1 as i64).max(self.col0 as i64 - other.col1 as i64);
        let gy = (other.row0 as i64 - self.row1 as i64).max(self.row0 as i64 - other.row1 as i64);
        gx.max(gy)
    }
}

fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

/// One scene. Pixel values are quantized to 8-bit levels so PNG storage is lossless.
pub fn generate_scene(spec: &SceneSpec) -> Result<(Image, Vec<GroundTruthInstance>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, w) = (spec.height, spec.width);

    let mut rects: Vec<Rect> = Vec::with_capacity(spec.n_blobs);
    let mut attempts = 0;
    while rects.len() < spec.n_blobs {
        if attempts == MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::CannotPlaceBlobs(attempts));
        }
        attempts += 1;
        let bw = rng.random_range(spec.blob_size.0..=spec.blob_size.1);
        let bh = rng.random_range(spec.blob_size.0..=spec.blob_size.1);
        let col0 = rng.random_range(BORDER..=w - BORDER - bw);
        let row0 = rng.random_range(BORDER..=h - BORDER - bh);
        let rect = Rect {
            col0,
            row0,
            col1: col0 + bw,
            row1: row0 + bh,
        };
        if rects
            .iter()
            .all(|r| r.gap(&rect) >= spec.min_separation as i64)
        {
            rects.push(rect);
        }
    }

    let mut values = vec![0.0; h * w];
    for rect in &rects {
        let level = rng.random_range(spec.intensity.0..=spec.intensity.1);
        for r in rect.row0..rect.row1 {
            for c in rect.col0..rect.col1 {
                values[r * w + c] = level;
            }
        }
    }
    if spec.background_noise_std > 0.0 {
        let normal = Normal::new(0.0, spec.background_noise_std)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }
    let image = Image::new(h, w, 1, values.into_iter().map(quantize).collect())?;

    let gts = rects
        .iter()
        .enumerate()
        .map(|(k, r)| {
            GroundTruthInstance::rectangle(
                k as u64 + 1,
                0,
                r.col0 as f64,
                r.row0 as f64,
                r.col1 as f64,
                r.row1 as f64,
            )
        })
        .collect::<Result<_>>()?;
    Ok((image, gts))
}

pub fn scene_file_name(seed: u64) -> String {
    format!("images/scene_{seed}.png")
}

/// Scenes for seeds `base_seed..base_seed + count`, written to
/// `dir/images/scene_<seed>.png` plus `dir/annotations.json`. Image ids are
/// the seeds; annotation ids are sequential from 1.
pub fn generate_suite(
    template: &SceneSpec,
    base_seed: u64,
    count: usize,
    dir: impl AsRef<Path>,
) -> Result<Vec<(Image, Vec<GroundTruthInstance>)>> {
    if count < 1 {
        return Err(Error::InvalidConfig("suite count must be >= 1".into()));
    }
    let dir = dir.as_ref();
    let images_dir = dir.join("images");
    std::fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;

    let mut dataset = CocoDataset {
        categories: vec![CocoCategory {
            id: 0,
            name: "blob".into(),
        }],
        ..Default::default()
    };
    let mut scenes = Vec::with_capacity(count);
    let mut next_id = 1;
    for seed in base_seed..base_seed + count as u64 {
        let spec = SceneSpec {
            seed,
            ..template.clone()
        };
        let (image, mut gts) = generate_scene(&spec)?;
        let file_name = scene_file_name(seed);
        image.write_png(dir.join(&file_name))?;
        dataset.images.push(CocoImage {
            id: seed,
            file_name,
            width: image.width(),
            height: image.height(),
        });
        for gt in &mut gts {
            gt.instance_id = next_id;
            next_id += 1;
            dataset.annotations.push(CocoAnnotation::from_instance(seed, gt));
        }
        scenes.push((image, gts));
    }
    dataset.save(dir.join("annotations.json"))?;
    Ok(scenes)
}
