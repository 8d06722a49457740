use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::{SoftMomentConfig, SOFT_MOMENT_NAME};
use crate::error::{Error, Result};
use crate::evaluation::{BinarizeConfig, DEFAULT_MATCH_IOU, DEFAULT_SCORE_THRESHOLD};
use crate::saliency::SmoothGradConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    /// Fixed monotone black → red → yellow → white ramp.
    pub colormap: String,
    pub overlay_alpha: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            colormap: "hot".into(),
            overlay_alpha: 0.5,
        }
    }
}

/// Fully resolved settings of one run; embedded in every results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub adapter: String,
    /// Used when `adapter` is the built-in soft-moment detector.
    pub soft_moment: SoftMomentConfig,
    pub smoothgrad: SmoothGradConfig,
    pub binarize: BinarizeConfig,
    pub score_threshold: f64,
    pub match_iou: f64,
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub render: RenderOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            adapter: SOFT_MOMENT_NAME.into(),
            soft_moment: SoftMomentConfig::default(),
            smoothgrad: SmoothGradConfig::default(),
            binarize: BinarizeConfig::default(),
            score_threshold: DEFAULT_SCORE_THRESHOLD,
            match_iou: DEFAULT_MATCH_IOU,
            inputs: Vec::new(),
            output_dir: PathBuf::from("odsg-out"),
            render: RenderOptions::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config file. Accepts a bare `RunConfig` object or any emitted
    /// results document carrying one under `"config"`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if let Some(embedded) = value.get_mut("config") {
            value = embedded.take();
        }
        serde_json::from_value(value).map_err(|e| Error::json(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.smoothgrad.validate()?;
        self.binarize.validate()?;
        self.soft_moment.validate()?;
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::InvalidConfig("score_threshold must be in [0, 1]".into()));
        }
        if !(self.match_iou > 0.0 && self.match_iou <= 1.0) {
            return Err(Error::InvalidConfig("match_iou must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.render.overlay_alpha) {
            return Err(Error::InvalidConfig("overlay_alpha must be in [0, 1]".into()));
        }
        Ok(())
    }
}
