use super::BinaryMask;
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Ground-truth mask cut into vertical and horizontal thirds of its box.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdsPartition {
    pub left: BinaryMask,
    pub mid_x: BinaryMask,
    pub right: BinaryMask,
    pub top: BinaryMask,
    pub mid_y: BinaryMask,
    pub bottom: BinaryMask,
}

/// Strip index 0, 1, 2 of a pixel center against cuts at `lo + len/3` and
/// `lo + 2·len/3` (half-open strips).
fn strip(center: f64, lo: f64, len: f64) -> u8 {
    let (a, b) = (lo + len / 3.0, lo + 2.0 * len / 3.0);
    if center < a {
        0
    } else if center < b {
        1
    } else {
        2
    }
}

pub fn split_thirds(gt_mask: &BinaryMask, gt_bbox: &BBox) -> Result<ThirdsPartition> {
    if gt_mask.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let (h, w) = gt_mask.dims();
    let col_strip: Vec<u8> = (0..w)
        .map(|c| strip(c as f64 + 0.5, gt_bbox.xmin, gt_bbox.width()))
        .collect();
    let row_strip: Vec<u8> = (0..h)
        .map(|r| strip(r as f64 + 0.5, gt_bbox.ymin, gt_bbox.height()))
        .collect();
    let by_col = |k: u8| BinaryMask::from_fn(h, w, |r, c| gt_mask.get(r, c) && col_strip[c] == k);
    let by_row = |k: u8| BinaryMask::from_fn(h, w, |r, c| gt_mask.get(r, c) && row_strip[r] == k);
    Ok(ThirdsPartition {
        left: by_col(0),
        mid_x: by_col(1),
        right: by_col(2),
        top: by_row(0),
        mid_y: by_row(1),
        bottom: by_row(2),
    })
}
