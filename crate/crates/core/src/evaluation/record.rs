use serde::{Deserialize, Serialize};

use super::{binarize, iof, rasterize_polygons, split_thirds, BinarizeConfig, BinaryMask, GroundTruthInstance};
use crate::detector::SaliencyTarget;
use crate::error::Result;
use crate::saliency::DetectionSaliency;

/// Which part of the ground truth an IOF was measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Left,
    Right,
    Top,
    Bottom,
    MidX,
    MidY,
    FullPolygon,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Left => "left",
            Region::Right => "right",
            Region::Top => "top",
            Region::Bottom => "bottom",
            Region::MidX => "mid_x",
            Region::MidY => "mid_y",
            Region::FullPolygon => "full_polygon",
        }
    }

    /// The outer third a box parameter's saliency should land on.
    pub fn target_side(target: SaliencyTarget) -> Region {
        match target {
            SaliencyTarget::Xmin => Region::Left,
            SaliencyTarget::Xmax => Region::Right,
            SaliencyTarget::Ymin => Region::Top,
            SaliencyTarget::Ymax => Region::Bottom,
            SaliencyTarget::Cls => Region::FullPolygon,
        }
    }

    /// The middle third used as the background comparison.
    pub fn background(target: SaliencyTarget) -> Option<Region> {
        match target {
            SaliencyTarget::Xmin | SaliencyTarget::Xmax => Some(Region::MidX),
            SaliencyTarget::Ymin | SaliencyTarget::Ymax => Some(Region::MidY),
            SaliencyTarget::Cls => None,
        }
    }
}

/// IOFs of one box parameter against its outer third and the middle third.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SideIof {
    pub target: Option<f64>,
    pub background: Option<f64>,
}

/// Evaluation of one detection against its matched ground-truth instance.
/// `None` marks an empty (or missing) saliency mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IofRecord {
    pub image_id: u64,
    pub detection_id: usize,
    pub gt_instance_id: u64,
    pub score: f64,
    /// vs left third / mid_x
    pub xmin: SideIof,
    /// vs top third / mid_y
    pub ymin: SideIof,
    /// vs right third / mid_x
    pub xmax: SideIof,
    /// vs bottom third / mid_y
    pub ymax: SideIof,
    /// Classification map vs the whole ground-truth mask.
    pub cls_full_polygon: Option<f64>,
}

impl IofRecord {
    pub fn side(&self, target: SaliencyTarget) -> Option<&SideIof> {
        match target {
            SaliencyTarget::Xmin => Some(&self.xmin),
            SaliencyTarget::Ymin => Some(&self.ymin),
            SaliencyTarget::Xmax => Some(&self.xmax),
            SaliencyTarget::Ymax => Some(&self.ymax),
            SaliencyTarget::Cls => None,
        }
    }

    /// The eight box-parameter entries `(parameter, region, iof)` in panel order.
    pub fn box_entries(&self) -> Vec<(SaliencyTarget, Region, Option<f64>)> {
        SaliencyTarget::BOX_PARAMETERS
            .into_iter()
            .flat_map(|t| {
                let s = self.side(t).copied().unwrap_or_default();
                [
                    (t, Region::target_side(t), s.target),
                    (t, Region::background(t).expect("box parameter"), s.background),
                ]
            })
            .collect()
    }

    /// Every entry including the classification one.
    pub fn entries(&self) -> Vec<(SaliencyTarget, Region, Option<f64>)> {
        let mut all = self.box_entries();
        all.push((SaliencyTarget::Cls, Region::FullPolygon, self.cls_full_polygon));
        all
    }
}

fn masked_iof(mask: Option<&BinaryMask>, region: &BinaryMask) -> Result<Option<f64>> {
    match mask {
        Some(m) if !m.is_empty() => iof(m, region).map(Some),
        _ => Ok(None),
    }
}

/// Binarizes the five maps of `ds` and measures them against the thirds of `gt`.
pub fn evaluate_detection(
    image_id: u64,
    ds: &DetectionSaliency,
    gt: &GroundTruthInstance,
    bin_cfg: &BinarizeConfig,
    height: usize,
    width: usize,
) -> Result<IofRecord> {
    let gt_mask = rasterize_polygons(gt, height, width)?;
    let thirds = split_thirds(&gt_mask, &gt.bbox)?;
    let mask_of = |t: SaliencyTarget| ds.map(t).map(|m| binarize(m, bin_cfg).mask);

    let side = |t: SaliencyTarget, outer: &BinaryMask, middle: &BinaryMask| -> Result<SideIof> {
        let m = mask_of(t);
        Ok(SideIof {
            target: masked_iof(m.as_ref(), outer)?,
            background: masked_iof(m.as_ref(), middle)?,
        })
    };

    Ok(IofRecord {
        image_id,
        detection_id: ds.detection.id,
        gt_instance_id: gt.instance_id,
        score: ds.detection.score,
        xmin: side(SaliencyTarget::Xmin, &thirds.left, &thirds.mid_x)?,
        ymin: side(SaliencyTarget::Ymin, &thirds.top, &thirds.mid_y)?,
        xmax: side(SaliencyTarget::Xmax, &thirds.right, &thirds.mid_x)?,
        ymax: side(SaliencyTarget::Ymax, &thirds.bottom, &thirds.mid_y)?,
        cls_full_polygon: masked_iof(mask_of(SaliencyTarget::Cls).as_ref(), &gt_mask)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{Detection, TargetHandle};
    use crate::geometry::BBox;
    use crate::saliency::{SaliencyMap, TargetSaliency};

    const H: usize = 32;
    const W: usize = 32;

    fn block(r0: usize, r1: usize, c0: usize, c1: usize) -> SaliencyMap {
        let mut v = vec![0.0; H * W];
        for r in r0..r1 {
            for c in c0..c1 {
                v[r * W + c] = 1.0;
            }
        }
        SaliencyMap::new(H, W, v).unwrap()
    }

    fn saliency(maps: [SaliencyMap; 5]) -> DetectionSaliency {
        DetectionSaliency {
            detection: Detection {
                id: 0,
                bbox: BBox::new(2.0, 2.0, 29.99, 29.99).unwrap(),
                class_id: 0,
                score: 0.99,
                handle: TargetHandle { pass: 0, index: 0 },
            },
            targets: SaliencyTarget::ALL
                .into_iter()
                .zip(maps)
                .map(|(target, m)| TargetSaliency {
                    target,
                    matched_samples: 1,
                    map: Ok(m),
                })
                .collect(),
        }
    }

    fn raw() -> BinarizeConfig {
        BinarizeConfig {
            filter_sigma: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn left_third_and_middle_third_signatures() {
        // GT covers cols/rows 2..29 (width 27, thirds of 9).
        let gt = GroundTruthInstance::rectangle(1, 0, 2.0, 2.0, 29.0, 29.0).unwrap();
        let inside_left = block(5, 25, 3, 10);
        let in_middle = block(5, 25, 12, 19);
        let ds = saliency([
            inside_left,
            block(3, 10, 5, 25),
            block(5, 25, 21, 28),
            block(21, 28, 5, 25),
            block(2, 29, 2, 29),
        ]);
        let rec = evaluate_detection(0, &ds, &gt, &raw(), H, W).unwrap();
        assert_eq!(rec.xmin.target, Some(1.0));
        assert_eq!(rec.xmin.background, Some(0.0));
        assert_eq!(rec.ymin.target, Some(1.0));
        assert_eq!(rec.xmax.target, Some(1.0));
        assert_eq!(rec.ymax.target, Some(1.0));
        assert_eq!(rec.cls_full_polygon, Some(1.0));

        let mut maps = ds.clone();
        maps.targets[0].map = Ok(in_middle);
        let rec = evaluate_detection(0, &maps, &gt, &raw(), H, W).unwrap();
        assert_eq!(rec.xmin.target, Some(0.0));
        assert_eq!(rec.xmin.background, Some(1.0));
    }

    #[test]
    fn zero_map_gives_null_entries() {
        let gt = GroundTruthInstance::rectangle(1, 0, 2.0, 2.0, 29.0, 29.0).unwrap();
        let ds = saliency([
            SaliencyMap::zeros(H, W),
            block(3, 10, 5, 25),
            block(5, 25, 21, 28),
            block(21, 28, 5, 25),
            block(2, 29, 2, 29),
        ]);
        let rec = evaluate_detection(0, &ds, &gt, &BinarizeConfig::default(), H, W).unwrap();
        assert_eq!(rec.xmin, SideIof::default());
        assert!(rec.ymin.target.is_some() && rec.cls_full_polygon.is_some());
        assert_eq!(rec.box_entries().len(), 8);
        assert_eq!(rec.entries().iter().filter(|e| e.2.is_none()).count(), 2);
    }
}
