use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::saliency::fingerprint_hex;
use super::{build_adapter, create_dir, write_json, CmdResult, Failure, MapStatus, ResultsFile, RunConfig, RunFlags, EXIT_OK};
use crate::detector::{detect, Detection, DetectorAdapter, TargetHandle};
use crate::evaluation::{evaluate_detection, match_to_gt, CocoDataset, GroundTruthInstance, IofRecord};
use crate::image::Image;
use crate::mapio::read_map;
use crate::saliency::{odsmoothgrad_for, AlignmentFailure, DetectionSaliency, TargetSaliency};

pub const RECORDS_SCHEMA: &str = "odsg.iof_records/1";
pub const VIOLIN_CSV_HEADER: &str = "record_id,parameter,region,iof";

#[derive(Debug, Args)]
pub(crate) struct ValidateArgs {
    /// COCO-subset annotation file (polygon segmentations only).
    #[arg(long)]
    annotations: PathBuf,
    /// Directory that image `file_name`s are relative to. Defaults to the
    /// directory of the annotation file.
    #[arg(long)]
    images_dir: Option<PathBuf>,
    /// Precomputed results.json from `odsg saliency`; maps are read instead
    /// of recomputed.
    #[arg(long)]
    saliency: Option<PathBuf>,
    #[command(flatten)]
    flags: RunFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsSummary {
    pub images: usize,
    pub detections: usize,
    pub detections_above_threshold: usize,
    pub matched: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsFile {
    pub schema: String,
    pub config: RunConfig,
    pub summary: RecordsSummary,
    /// Position in this list is the `record_id` of violin.csv.
    pub records: Vec<IofRecord>,
}

enum Source {
    Adapter(Box<dyn DetectorAdapter>),
    Precomputed {
        base: PathBuf,
        by_fingerprint: HashMap<String, super::ImageResult>,
    },
}

/// Detection count, count above threshold, and matched saliency with its truth.
type ImageSaliency = (usize, usize, Vec<(DetectionSaliency, GroundTruthInstance)>);

/// Detections of one image, plus saliency for the matched subset.
fn saliency_for(
    source: &Source,
    cfg: &RunConfig,
    image: &Image,
    gts: &[GroundTruthInstance],
    file_name: &str,
) -> std::result::Result<ImageSaliency, Failure> {
    let detections: Vec<Detection>;
    let result_entry;
    match source {
        Source::Adapter(adapter) => {
            detections = detect(adapter.as_ref(), image)?;
            result_entry = None;
        }
        Source::Precomputed { by_fingerprint, .. } => {
            let fp = fingerprint_hex(image);
            let entry = by_fingerprint
                .get(&fp)
                .ok_or_else(|| Failure::data(format!("no precomputed saliency for {file_name}")))?;
            detections = entry
                .detections
                .iter()
                .map(|d| Detection {
                    id: d.id,
                    bbox: d.bbox,
                    class_id: d.class_id,
                    score: d.score,
                    handle: TargetHandle {
                        pass: image.fingerprint(),
                        index: d.id,
                    },
                })
                .collect();
            result_entry = Some(entry);
        }
    }
    let above = detections
        .iter()
        .filter(|d| d.score > cfg.score_threshold)
        .count();
    let pairs = match_to_gt(&detections, gts, cfg.score_threshold, cfg.match_iou);

    let saliencies: Vec<DetectionSaliency> = match (source, result_entry) {
        (Source::Adapter(adapter), _) => {
            let matched: Vec<Detection> = pairs.iter().map(|(d, _)| (*d).clone()).collect();
            odsmoothgrad_for(adapter.as_ref(), image, &matched, &cfg.smoothgrad)?
        }
        (Source::Precomputed { base, .. }, Some(entry)) => pairs
            .iter()
            .map(|(d, _)| load_precomputed(base, entry, d, image))
            .collect::<std::result::Result<_, _>>()?,
        (Source::Precomputed { .. }, None) => unreachable!("entry resolved above"),
    };
    let out = saliencies
        .into_iter()
        .zip(pairs.iter().map(|(_, g)| (*g).clone()))
        .collect();
    Ok((detections.len(), above, out))
}

fn load_precomputed(
    base: &Path,
    entry: &super::ImageResult,
    detection: &Detection,
    image: &Image,
) -> std::result::Result<DetectionSaliency, Failure> {
    let result = entry
        .detections
        .iter()
        .find(|r| r.id == detection.id)
        .expect("detection taken from this entry");
    let mut targets = Vec::with_capacity(result.maps.len());
    for m in &result.maps {
        let map = match (&m.status, &m.odsg) {
            (MapStatus::Ok, Some(rel)) => {
                let map = read_map(base.join(rel))?;
                if map.dims() != image.dims() {
                    return Err(Failure::data(format!(
                        "{rel}: map is {:?}, image is {:?}",
                        map.dims(),
                        image.dims()
                    )));
                }
                Ok(map)
            }
            _ => Err(AlignmentFailure {
                matched_fraction: result.matched_fraction,
            }),
        };
        targets.push(TargetSaliency {
            target: m.target,
            matched_samples: result.matched_samples,
            map,
        });
    }
    Ok(DetectionSaliency {
        detection: detection.clone(),
        targets,
    })
}

/// Long-format rows: four box parameters × (outer third, middle third) per record.
pub(crate) fn violin_csv(records: &[IofRecord]) -> String {
    let mut out = String::from(VIOLIN_CSV_HEADER);
    out.push('\n');
    for (id, rec) in records.iter().enumerate() {
        for (target, region, v) in rec.box_entries() {
            let value = v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{id},{target},{},{value}", region.as_str());
        }
    }
    out
}

pub(crate) fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    let cfg = args.flags.resolve()?;
    let dataset = CocoDataset::load(&args.annotations)?;
    let ground_truth = dataset.ground_truth()?;
    let images_dir = match &args.images_dir {
        Some(d) => d.clone(),
        None => args
            .annotations
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    let source = match &args.saliency {
        Some(path) => {
            let file = ResultsFile::load(path)?;
            Source::Precomputed {
                base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
                by_fingerprint: file
                    .images
                    .into_iter()
                    .map(|r| (r.fingerprint.clone(), r))
                    .collect(),
            }
        }
        None => Source::Adapter(build_adapter(&cfg)?),
    };

    let mut records = Vec::new();
    let mut summary = RecordsSummary {
        images: 0,
        detections: 0,
        detections_above_threshold: 0,
        matched: 0,
        note: None,
    };
    for info in &dataset.images {
        let image = Image::read_png(images_dir.join(&info.file_name))?;
        if (image.width(), image.height()) != (info.width, info.height) {
            return Err(Failure::data(format!(
                "{}: image is {}x{}, annotations say {}x{}",
                info.file_name,
                image.width(),
                image.height(),
                info.width,
                info.height
            )));
        }
        let gts = ground_truth.get(&info.id).map(Vec::as_slice).unwrap_or(&[]);
        let (n, above, pairs) = saliency_for(&source, &cfg, &image, gts, &info.file_name)?;
        summary.images += 1;
        summary.detections += n;
        summary.detections_above_threshold += above;
        summary.matched += pairs.len();
        for (ds, gt) in &pairs {
            records.push(evaluate_detection(
                info.id,
                ds,
                gt,
                &cfg.binarize,
                image.height(),
                image.width(),
            )?);
        }
    }
    if summary.matched == 0 {
        summary.note = Some(format!(
            "zero matches: no detection above score {} matched ground truth",
            cfg.score_threshold
        ));
    }

    let out = cfg.output_dir.clone();
    create_dir(&out)?;
    let file = RecordsFile {
        schema: RECORDS_SCHEMA.into(),
        config: cfg,
        summary,
        records,
    };
    let records_path = out.join("iof_records.json");
    write_json(&records_path, &file)?;
    let csv_path = out.join("violin.csv");
    std::fs::write(&csv_path, violin_csv(&file.records))
        .map_err(|e| Failure::data(format!("{}: {e}", csv_path.display())))?;
    println!(
        "{}: {} record(s) from {} image(s)",
        records_path.display(),
        file.records.len(),
        file.summary.images
    );
    Ok(EXIT_OK)
}
