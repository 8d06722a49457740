//! Central-difference gradients through any adapter, used as a test oracle.

use super::{detect, Detection, DetectorAdapter, SaliencyTarget};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::image::{GradientImage, Image};

/// Highest-IOU candidate overlapping `reference` at all.
pub fn match_by_iou<'a>(reference: &Detection, candidates: &'a [Detection]) -> Option<&'a Detection> {
    candidates
        .iter()
        .map(|c| (iou(&reference.bbox, &c.bbox), c))
        .filter(|(v, _)| *v > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

fn perturbed_value(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    reference: &Detection,
    target: SaliencyTarget,
    index: usize,
    delta: f64,
) -> Result<f64> {
    let mut values = image.pixels().to_vec();
    values[index] += delta;
    let shifted = Image::unbounded(image.height(), image.width(), image.channels(), values)?;
    let dets = detect(adapter, &shifted)?;
    match_by_iou(reference, &dets)
        .map(|d| d.target_value(target))
        .ok_or(Error::UnstableDetection)
}

/// Central differences at selected `(row, col, channel)` entries.
pub fn finite_diff_at(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    reference: &Detection,
    target: SaliencyTarget,
    h: f64,
    entries: &[(usize, usize, usize)],
) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(h));
    }
    let (w, c) = (image.width(), image.channels());
    entries
        .iter()
        .map(|&(row, col, ch)| {
            let index = (row * w + col) * c + ch;
            let plus = perturbed_value(adapter, image, reference, target, index, h)?;
            let minus = perturbed_value(adapter, image, reference, target, index, -h)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

/// Full central-difference gradient image. Costs two forward passes per entry.
pub fn finite_diff_gradient(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    reference: &Detection,
    target: SaliencyTarget,
    h: f64,
) -> Result<GradientImage> {
    let (hgt, w, c) = (image.height(), image.width(), image.channels());
    let entries: Vec<_> = (0..hgt)
        .flat_map(|r| (0..w).flat_map(move |col| (0..c).map(move |ch| (r, col, ch))))
        .collect();
    let values = finite_diff_at(adapter, image, reference, target, h, &entries)?;
    GradientImage::from_values(hgt, w, c, values)
}
