//! External adapters spoken to over stdin/stdout JSON.
//!
//! An adapter named `foo` is an executable `odsg-adapter-foo` located in one
//! of the directories listed (`:`-separated) in `ODSG_ADAPTER_PATH`. It is
//! invoked once per call as `odsg-adapter-foo detect` or
//! `odsg-adapter-foo gradient` with a JSON request on stdin:
//!
//! ```text
//! detect   <- {"image": IMAGE}
//!          -> {"detections": [{"box": {"xmin":..,"ymin":..,"xmax":..,"ymax":..},
//!                              "class_id": 0, "score": 0.97}, ...]}
//! gradient <- {"image": IMAGE, "index": 0, "target": "xmin"}
//!          -> {"gradient": [f64; height*width*channels]}
//! IMAGE     = {"height": H, "width": W, "channels": C, "pixels": [f64; H*W*C]}
//! ```
//!
//! `index` is the position of the detection in the adapter's own `detect`
//! response for the same image. The adapter process must be deterministic.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use super::{Capabilities, Detection, DetectorAdapter, SaliencyTarget, TargetHandle};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::image::{GradientImage, Image};

pub const ADAPTER_PATH_ENV: &str = "ODSG_ADAPTER_PATH";
const EXECUTABLE_PREFIX: &str = "odsg-adapter-";

#[derive(Serialize)]
struct WireImage<'a> {
    height: usize,
    width: usize,
    channels: usize,
    pixels: &'a [f64],
}

impl<'a> From<&'a Image> for WireImage<'a> {
    fn from(img: &'a Image) -> Self {
        Self {
            height: img.height(),
            width: img.width(),
            channels: img.channels(),
            pixels: img.pixels(),
        }
    }
}

#[derive(Deserialize)]
struct WireDetection {
    #[serde(rename = "box")]
    bbox: BBox,
    #[serde(default)]
    class_id: u32,
    score: f64,
}

#[derive(Deserialize)]
struct DetectResponse {
    detections: Vec<WireDetection>,
}

#[derive(Deserialize)]
struct GradientResponse {
    gradient: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SubprocessAdapter {
    name: String,
    executable: PathBuf,
}

impl SubprocessAdapter {
    pub fn new(name: impl Into<String>, executable: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            executable: executable.into(),
        }
    }

    /// Searches `ODSG_ADAPTER_PATH` for `odsg-adapter-<name>`.
    pub fn discover(name: &str) -> Result<Self> {
        let dirs = std::env::var_os(ADAPTER_PATH_ENV).unwrap_or_default();
        std::env::split_paths(&dirs)
            .map(|d| d.join(format!("{EXECUTABLE_PREFIX}{name}")))
            .find(|p| p.is_file())
            .map(|p| Self::new(name, p))
            .ok_or_else(|| Error::UnknownAdapter(name.to_string()))
    }

    pub fn executable(&self) -> &Path {
        &self.executable
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Adapter {
            name: self.name.clone(),
            message: message.into(),
        }
    }

    fn call<T: serde::de::DeserializeOwned>(&self, op: &str, request: &serde_json::Value) -> Result<T> {
        let mut child = Command::new(&self.executable)
            .arg(op)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| self.fail(format!("spawn {}: {e}", self.executable.display())))?;
        {
            let mut stdin = child.stdin.take().expect("stdin piped");
            serde_json::to_writer(&mut stdin, request).map_err(|e| self.fail(e.to_string()))?;
            stdin.flush().map_err(|e| self.fail(e.to_string()))?;
        }
        let out = child
            .wait_with_output()
            .map_err(|e| self.fail(e.to_string()))?;
        if !out.status.success() {
            return Err(self.fail(format!(
                "{op} exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        serde_json::from_slice(&out.stdout).map_err(|e| self.fail(format!("bad {op} response: {e}")))
    }
}

impl DetectorAdapter for SubprocessAdapter {
    fn name(&self) -> &str {
        &self.name
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    fn detect(&self, image: &Image) -> Result<Vec<Detection>> {
        let request = serde_json::json!({ "image": WireImage::from(image) });
        let response: DetectResponse = self.call("detect", &request)?;
        let pass = image.fingerprint();
        response
            .detections
            .into_iter()
            .enumerate()
            .map(|(index, d)| {
                d.bbox.validate().map_err(|e| self.fail(e.to_string()))?;
                Ok(Detection {
                    id: index,
                    bbox: d.bbox,
                    class_id: d.class_id,
                    score: d.score,
                    handle: TargetHandle { pass, index },
                })
            })
            .collect()
    }

    fn input_gradient(
        &self,
        image: &Image,
        handle: &TargetHandle,
        target: SaliencyTarget,
    ) -> Result<GradientImage> {
        if handle.pass != image.fingerprint() {
            return Err(Error::InvalidHandle);
        }
        let request = serde_json::json!({
            "image": WireImage::from(image),
            "index": handle.index,
            "target": target.as_str(),
        });
        let response: GradientResponse = self.call("gradient", &request)?;
        GradientImage::from_values(
            image.height(),
            image.width(),
            image.channels(),
            response.gradient,
        )
        .map_err(|e| self.fail(e.to_string()))
    }
}
