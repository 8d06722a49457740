use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{build_adapter, create_dir, write_json, CmdResult, Failure, RunConfig, RunFlags};
use super::{EXIT_NUMERIC, EXIT_OK};
use crate::detector::SaliencyTarget;
use crate::geometry::BBox;
use crate::image::Image;
use crate::mapio::{write_map, write_map_png};
use crate::render::detection_panels;
use crate::saliency::{odsmoothgrad, DetectionSaliency};

pub const RESULTS_SCHEMA: &str = "odsg.results/1";

#[derive(Debug, Args)]
pub(crate) struct SaliencyArgs {
    /// Input PNG images (8-bit gray or RGB). Defaults to `inputs` of the config.
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    flags: RunFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapStatus {
    Ok,
    InsufficientAlignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub target: SaliencyTarget,
    pub status: MapStatus,
    /// Paths are relative to the directory holding results.json.
    pub odsg: Option<String>,
    pub png: Option<String>,
    /// Map maximum; PNG value 65535 corresponds to this saliency.
    pub png_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub id: usize,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub class_id: u32,
    pub score: f64,
    pub status: MapStatus,
    pub matched_samples: usize,
    pub matched_fraction: f64,
    pub overlay: Option<String>,
    pub maps: Vec<MapEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub path: String,
    pub stem: String,
    /// Hex image fingerprint; ties precomputed maps back to their image.
    pub fingerprint: String,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub detections: Vec<DetectionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsSummary {
    pub images: usize,
    pub detections: usize,
    pub failed_detections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub schema: String,
    pub config: RunConfig,
    pub images: Vec<ImageResult>,
    pub summary: ResultsSummary,
}

impl ResultsFile {
    pub fn load(path: impl AsRef<Path>) -> crate::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| crate::Error::json(path, e))
    }
}

pub(crate) fn fingerprint_hex(image: &Image) -> String {
    format!("{:016x}", image.fingerprint())
}

fn unique_stem(path: &Path, used: &mut HashSet<String>) -> String {
    let base = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let mut stem = base.clone();
    let mut k = 2;
    while !used.insert(stem.clone()) {
        stem = format!("{base}_{k}");
        k += 1;
    }
    stem
}

fn save_detection(
    out: &Path,
    stem: &str,
    image: &Image,
    ds: &DetectionSaliency,
    cfg: &RunConfig,
) -> std::result::Result<DetectionResult, Failure> {
    let d = &ds.detection;
    let matched = ds.targets.first().map_or(0, |t| t.matched_samples);
    let mut maps = Vec::with_capacity(ds.targets.len());
    for t in &ds.targets {
        let entry = match &t.map {
            Ok(map) => {
                let rel = format!("maps/{stem}/det{}_{}", d.id, t.target);
                let odsg = format!("{rel}.odsg");
                let png = format!("{rel}.png");
                write_map(out.join(&odsg), map)?;
                let scale = write_map_png(out.join(&png), map)?;
                MapEntry {
                    target: t.target,
                    status: MapStatus::Ok,
                    odsg: Some(odsg),
                    png: Some(png),
                    png_scale: Some(scale),
                }
            }
            Err(_) => MapEntry {
                target: t.target,
                status: MapStatus::InsufficientAlignment,
                odsg: None,
                png: None,
                png_scale: None,
            },
        };
        maps.push(entry);
    }
    let overlay = if ds.is_empty() {
        None
    } else {
        let rel = format!("overlays/{stem}_det{}.png", d.id);
        let path = out.join(&rel);
        detection_panels(image, ds, cfg.render.overlay_alpha)
            .save(&path)
            .map_err(|e| crate::Error::png(&path, e))?;
        Some(rel)
    };
    Ok(DetectionResult {
        id: d.id,
        bbox: d.bbox,
        class_id: d.class_id,
        score: d.score,
        status: if ds.is_empty() {
            MapStatus::InsufficientAlignment
        } else {
            MapStatus::Ok
        },
        matched_samples: matched,
        matched_fraction: matched as f64 / cfg.smoothgrad.n_samples as f64,
        overlay,
        maps,
    })
}

pub(crate) fn cmd_saliency(args: &SaliencyArgs) -> CmdResult {
    let mut cfg = args.flags.resolve()?;
    if !args.inputs.is_empty() {
        cfg.inputs = args.inputs.clone();
    }
    if cfg.inputs.is_empty() {
        return Err(Failure::usage("no input images given"));
    }
    let adapter = build_adapter(&cfg)?;

    // every input must be readable before any work starts
    let images: Vec<Image> = cfg
        .inputs
        .iter()
        .map(Image::read_png)
        .collect::<crate::Result<_>>()?;

    let out = cfg.output_dir.clone();
    create_dir(&out)?;
    create_dir(&out.join("overlays"))?;

    let mut used = HashSet::new();
    let mut results = Vec::with_capacity(images.len());
    let (mut total, mut failed) = (0, 0);
    for (path, image) in cfg.inputs.iter().zip(&images) {
        let stem = unique_stem(path, &mut used);
        let saliencies = odsmoothgrad(adapter.as_ref(), image, &cfg.smoothgrad)?;
        if !saliencies.is_empty() {
            create_dir(&out.join("maps").join(&stem))?;
        }
        let mut detections = Vec::with_capacity(saliencies.len());
        for ds in &saliencies {
            let r = save_detection(&out, &stem, image, ds, &cfg)?;
            total += 1;
            failed += usize::from(r.status != MapStatus::Ok);
            detections.push(r);
        }
        results.push(ImageResult {
            path: path.display().to_string(),
            stem,
            fingerprint: fingerprint_hex(image),
            height: image.height(),
            width: image.width(),
            channels: image.channels(),
            detections,
        });
    }

    let file = ResultsFile {
        schema: RESULTS_SCHEMA.into(),
        config: cfg,
        summary: ResultsSummary {
            images: results.len(),
            detections: total,
            failed_detections: failed,
        },
        images: results,
    };
    let results_path = out.join("results.json");
    write_json(&results_path, &file)?;
    println!(
        "{}: {} image(s), {} detection(s), {} failed alignment",
        results_path.display(),
        file.summary.images,
        total,
        failed
    );
    if total > 0 && failed == total {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: "insufficient alignment for every detection".into(),
        });
    }
    Ok(EXIT_OK)
}
