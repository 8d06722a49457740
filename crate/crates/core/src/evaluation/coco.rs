//! COCO-format annotation subset: images, polygon annotations, categories.
//!
//! Unknown fields are ignored. Run-length-encoded segmentations are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GroundTruthInstance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CocoDataset {
    #[serde(default)]
    pub images: Vec<CocoImage>,
    #[serde(default)]
    pub annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    pub categories: Vec<CocoCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    pub segmentation: Segmentation,
    /// `[x, y, width, height]`
    #[serde(default)]
    pub bbox: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub iscrowd: u8,
}

fn is_zero(v: &u8) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Segmentation {
    /// Flat `[x0, y0, x1, y1, ...]` lists, one per polygon.
    Polygons(Vec<Vec<f64>>),
    Rle(serde_json::Map<String, serde_json::Value>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
}

impl CocoDataset {
    pub fn from_json(text: &str) -> Result<Self> {
        let ds: Self =
            serde_json::from_str(text).map_err(|e| Error::Annotations(e.to_string()))?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Annotations(m) => Error::Annotations(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> Result<()> {
        let known: std::collections::BTreeSet<u64> = self.images.iter().map(|i| i.id).collect();
        for a in &self.annotations {
            if let Segmentation::Rle(_) = a.segmentation {
                return Err(Error::RleUnsupported(a.id));
            }
            if !known.contains(&a.image_id) {
                return Err(Error::Annotations(format!(
                    "annotation {} references unknown image {}",
                    a.id, a.image_id
                )));
            }
        }
        Ok(())
    }

    pub fn image(&self, id: u64) -> Option<&CocoImage> {
        self.images.iter().find(|i| i.id == id)
    }

    /// Ground-truth instances per image id, crowd annotations skipped.
    /// Vertices are clamped to the image frame.
    pub fn ground_truth(&self) -> Result<BTreeMap<u64, Vec<GroundTruthInstance>>> {
        let mut out: BTreeMap<u64, Vec<GroundTruthInstance>> =
            self.images.iter().map(|i| (i.id, Vec::new())).collect();
        for a in self.annotations.iter().filter(|a| a.iscrowd == 0) {
            let img = self.image(a.image_id).expect("validated image reference");
            let Segmentation::Polygons(flat) = &a.segmentation else {
                return Err(Error::RleUnsupported(a.id));
            };
            let (w, h) = (img.width as f64, img.height as f64);
            let polygons = flat
                .iter()
                .map(|coords| {
                    if coords.len() % 2 != 0 {
                        return Err(Error::Annotations(format!(
                            "annotation {}: odd coordinate count {}",
                            a.id,
                            coords.len()
                        )));
                    }
                    Ok(coords
                        .chunks_exact(2)
                        .map(|xy| (xy[0].clamp(0.0, w), xy[1].clamp(0.0, h)))
                        .collect())
                })
                .collect::<Result<Vec<_>>>()?;
            let gt = GroundTruthInstance::new(a.id, a.category_id, polygons)?;
            out.entry(a.image_id).or_default().push(gt);
        }
        Ok(out)
    }
}

impl CocoAnnotation {
    pub fn from_instance(image_id: u64, gt: &GroundTruthInstance) -> Self {
        Self {
            id: gt.instance_id,
            image_id,
            category_id: gt.class_id,
            segmentation: Segmentation::Polygons(
                gt.polygons
                    .iter()
                    .map(|p| p.iter().flat_map(|&(x, y)| [x, y]).collect())
                    .collect(),
            ),
            bbox: Some([gt.bbox.xmin, gt.bbox.ymin, gt.bbox.width(), gt.bbox.height()]),
            iscrowd: 0,
        }
    }
}
