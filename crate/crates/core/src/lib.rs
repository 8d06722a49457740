//! Per-detection saliency maps for object detectors.
//!
//! For every detection the crate produces five SmoothGrad maps: one for the
//! classification score and one for each box edge (`xmin`, `ymin`, `xmax`,
//! `ymax`). Detectors plug in through [`detector::DetectorAdapter`]; the
//! bundled [`detector::SoftMomentDetector`] has closed-form gradients and
//! serves as the reference implementation. The [`evaluation`] module checks
//! that box-edge maps concentrate on the matching side of the ground truth.

pub mod cli;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod filter;
pub mod geometry;
pub mod image;
pub mod mapio;
pub mod render;
pub mod saliency;
pub mod synthetic;

pub use detector::{
    detect, input_gradient, Detection, DetectorAdapter, SaliencyTarget, SoftMomentConfig,
    SoftMomentDetector,
};
pub use error::{Error, Result};
pub use geometry::{iou, BBox};
pub use image::{GradientImage, Image};
pub use saliency::{odsmoothgrad, odsmoothgrad_for, smoothgrad_map, DetectionSaliency, SaliencyMap, SmoothGradConfig};
