//! Differentiable-detector adapter contract.
//!
//! A detector exposes two operations: a forward pass producing
//! [`Detection`]s, and an input gradient of any of the five per-detection
//! scalars ([`SaliencyTarget`]) with respect to every pixel. Each detection
//! carries a [`TargetHandle`] that is only meaningful for the forward pass on
//! the exact image that produced it.

mod finite_diff;
mod soft_moment;
mod subprocess;

use serde::{Deserialize, Serialize};

pub use finite_diff::{finite_diff_at, finite_diff_gradient, match_by_iou};
pub use soft_moment::{
    soft_extent, ExtentDirection, SoftMomentConfig, SoftMomentDetector, SOFT_MOMENT_NAME,
};
pub use subprocess::{SubprocessAdapter, ADAPTER_PATH_ENV};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::image::{GradientImage, Image};

/// The five differentiable outputs of one detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaliencyTarget {
    Cls,
    Xmin,
    Ymin,
    Xmax,
    Ymax,
}

impl SaliencyTarget {
    /// Panel order used for rendering: xmin, ymin, xmax, ymax, classification.
    pub const ALL: [SaliencyTarget; 5] = [
        SaliencyTarget::Xmin,
        SaliencyTarget::Ymin,
        SaliencyTarget::Xmax,
        SaliencyTarget::Ymax,
        SaliencyTarget::Cls,
    ];

    pub const BOX_PARAMETERS: [SaliencyTarget; 4] = [
        SaliencyTarget::Xmin,
        SaliencyTarget::Ymin,
        SaliencyTarget::Xmax,
        SaliencyTarget::Ymax,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SaliencyTarget::Cls => "cls",
            SaliencyTarget::Xmin => "xmin",
            SaliencyTarget::Ymin => "ymin",
            SaliencyTarget::Xmax => "xmax",
            SaliencyTarget::Ymax => "ymax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl std::fmt::Display for SaliencyTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Opaque reference to one detection of one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetHandle {
    /// Identifies the forward pass (for stateless adapters, the image fingerprint).
    pub pass: u64,
    /// Adapter-internal index of the detection within that pass.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub id: usize,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: u32,
    pub score: f64,
    pub handle: TargetHandle,
}

impl Detection {
    /// Value of the scalar a saliency target differentiates.
    pub fn target_value(&self, target: SaliencyTarget) -> f64 {
        match target {
            SaliencyTarget::Cls => self.score,
            SaliencyTarget::Xmin => self.bbox.xmin,
            SaliencyTarget::Ymin => self.bbox.ymin,
            SaliencyTarget::Xmax => self.bbox.xmax,
            SaliencyTarget::Ymax => self.bbox.ymax,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    /// `detect`/`input_gradient` may be called concurrently on one instance.
    pub reentrant_gradients: bool,
}

/// A detector that can be differentiated with respect to its input pixels.
///
/// Implementations must be deterministic: the same image yields the same
/// detections, and a valid handle yields the same gradient. Adapters that are
/// not reentrant are still required to be `Sync`; callers serialize access
/// unless [`Capabilities::reentrant_gradients`] is set.
pub trait DetectorAdapter: Send + Sync {
    fn name(&self) -> &str;

    fn capabilities(&self) -> Capabilities;

    /// Raw forward pass. Use [`detect`] to get the normalized ordering.
    fn detect(&self, image: &Image) -> Result<Vec<Detection>>;

    /// `∂ scalar / ∂ pixel` for the scalar `target` of the detection `handle`.
    fn input_gradient(
        &self,
        image: &Image,
        handle: &TargetHandle,
        target: SaliencyTarget,
    ) -> Result<GradientImage>;
}

fn adapter_error(adapter: &dyn DetectorAdapter, err: Error) -> Error {
    match err {
        e @ (Error::Adapter { .. } | Error::InvalidHandle) => e,
        other => Error::Adapter {
            name: adapter.name().to_string(),
            message: other.to_string(),
        },
    }
}

/// Forward pass with normalized output: boxes clipped to the image, sorted by
/// descending score, ids `0..k` in that order.
pub fn detect(adapter: &dyn DetectorAdapter, image: &Image) -> Result<Vec<Detection>> {
    let raw = adapter
        .detect(image)
        .map_err(|e| adapter_error(adapter, e))?;
    let (h, w) = image.dims();
    let mut dets = Vec::with_capacity(raw.len());
    for mut d in raw {
        if !(0.0..=1.0).contains(&d.score) {
            return Err(Error::Adapter {
                name: adapter.name().to_string(),
                message: format!("score {} outside [0, 1]", d.score),
            });
        }
        d.bbox = d.bbox.clip(h, w);
        if d.bbox.validate().is_ok() {
            dets.push(d);
        }
    }
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    for (i, d) in dets.iter_mut().enumerate() {
        d.id = i;
    }
    Ok(dets)
}

/// Input gradient of one target scalar of `detection`.
pub fn input_gradient(
    adapter: &dyn DetectorAdapter,
    image: &Image,
    detection: &Detection,
    target: SaliencyTarget,
) -> Result<GradientImage> {
    let grad = adapter
        .input_gradient(image, &detection.handle, target)
        .map_err(|e| adapter_error(adapter, e))?;
    if (grad.height(), grad.width(), grad.channels())
        != (image.height(), image.width(), image.channels())
    {
        return Err(Error::Adapter {
            name: adapter.name().to_string(),
            message: "gradient shape does not match image".into(),
        });
    }
    Ok(grad)
}

/// Resolves an adapter by name: the built-in soft-moment detector, or an
/// external executable found through [`ADAPTER_PATH_ENV`].
pub fn adapter_by_name(name: &str) -> Result<Box<dyn DetectorAdapter>> {
    if name == SOFT_MOMENT_NAME {
        return Ok(Box::new(SoftMomentDetector::default()));
    }
    SubprocessAdapter::discover(name).map(|a| Box::new(a) as Box<dyn DetectorAdapter>)
}
