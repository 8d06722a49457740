use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// A closed polygon in continuous pixel coordinates.
pub type Polygon = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub instance_id: u64,
    pub class_id: u32,
    pub polygons: Vec<Polygon>,
    /// Axis-aligned extent of all polygons.
    pub bbox: BBox,
}

impl GroundTruthInstance {
    pub fn new(instance_id: u64, class_id: u32, polygons: Vec<Polygon>) -> Result<Self> {
        if polygons.is_empty() {
            return Err(Error::DegeneratePolygon(0));
        }
        if let Some(p) = polygons.iter().find(|p| p.len() < 3) {
            return Err(Error::DegeneratePolygon(p.len()));
        }
        if polygons
            .iter()
            .flatten()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::Annotations("non-finite polygon vertex".into()));
        }
        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in polygons.iter().flatten() {
            xmin = xmin.min(x);
            ymin = ymin.min(y);
            xmax = xmax.max(x);
            ymax = ymax.max(y);
        }
        let bbox = BBox::new(xmin, ymin, xmax, ymax)?;
        Ok(Self {
            instance_id,
            class_id,
            polygons,
            bbox,
        })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]` as a single 4-vertex polygon.
    pub fn rectangle(instance_id: u64, class_id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(
            instance_id,
            class_id,
            vec![vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)]],
        )
    }
}

/// Even-odd crossings of the horizontal line `y` with a polygon's edges.
fn crossings(polygon: &[(f64, f64)], y: f64, out: &mut Vec<f64>) {
    let n = polygon.len();
    for i in 0..n {
        let (x0, y0) = polygon[i];
        let (x1, y1) = polygon[(i + n - 1) % n];
        if (y0 > y) != (y1 > y) {
            out.push((x1 - x0) * (y - y0) / (y1 - y0) + x0);
        }
    }
}

/// Pixel `(row, col)` is foreground iff its center `(col + 0.5, row + 0.5)`
/// lies inside any polygon under the even-odd rule.
pub fn rasterize_polygons(gt: &GroundTruthInstance, height: usize, width: usize) -> Result<BinaryMask> {
    if let Some(p) = gt.polygons.iter().find(|p| p.len() < 3) {
        return Err(Error::DegeneratePolygon(p.len()));
    }
    let mut mask = BinaryMask::empty(height, width);
    let mut xs = Vec::new();
    for polygon in &gt.polygons {
        for row in 0..height {
            let y = row as f64 + 0.5;
            xs.clear();
            crossings(polygon, y, &mut xs);
            if xs.is_empty() {
                continue;
            }
            xs.sort_by(f64::total_cmp);
            for col in 0..width {
                let x = col as f64 + 0.5;
                // number of crossings strictly right of the center
                let right = xs.len() - xs.partition_point(|&c| c <= x);
                if right % 2 == 1 {
                    mask.set(row, col, true);
                }
            }
        }
    }
    Ok(mask)
}
