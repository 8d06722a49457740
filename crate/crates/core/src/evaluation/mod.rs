//! Localization checks for saliency maps against ground-truth polygons.
//!
//! Each map is smoothed and thresholded relative to its maximum, the matched
//! ground-truth polygon is rasterized and cut into thirds along x and y, and
//! intersection-over-foreground (IOF, denominator = saliency mask area) is
//! measured against the outer third a box parameter controls and against the
//! middle third as a background reference.

mod coco;
mod mask;
mod matching;
mod polygon;
mod record;
mod stats;
mod thirds;

pub use coco::{CocoAnnotation, CocoCategory, CocoDataset, CocoImage, Segmentation};
pub use mask::{binarize, gaussian_smooth, iof, BinarizeConfig, Binarized, BinaryMask};
pub use matching::{match_to_gt, DEFAULT_MATCH_IOU, DEFAULT_SCORE_THRESHOLD};
pub use polygon::{rasterize_polygons, GroundTruthInstance, Polygon};
pub use record::{evaluate_detection, IofRecord, Region, SideIof};
pub use stats::{aggregate, field_key, FieldStats, SummaryStats};
pub use thirds::{split_thirds, ThirdsPartition};
