use super::GroundTruthInstance;
use crate::detector::Detection;
use crate::geometry::iou;

pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.9;
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

/// Greedy detection → ground-truth matching.
///
/// Detections with `score <= score_threshold` are dropped. The rest are
/// visited by descending score; each takes the unmatched same-class instance
/// of highest box IOU, provided that IOU is at least `match_iou`.
pub fn match_to_gt<'d, 'g>(
    detections: &'d [Detection],
    gts: &'g [GroundTruthInstance],
    score_threshold: f64,
    match_iou: f64,
) -> Vec<(&'d Detection, &'g GroundTruthInstance)> {
    let mut order: Vec<&Detection> = detections
        .iter()
        .filter(|d| d.score > score_threshold)
        .collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));

    let mut taken = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for d in order {
        let best = gts
            .iter()
            .enumerate()
            .filter(|(i, g)| !taken[*i] && g.class_id == d.class_id)
            .map(|(i, g)| (i, iou(&d.bbox, &g.bbox)))
            .filter(|(_, v)| *v >= match_iou)
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        if let Some((i, _)) = best {
            taken[i] = true;
            pairs.push((d, &gts[i]));
        }
    }
    pairs
}
