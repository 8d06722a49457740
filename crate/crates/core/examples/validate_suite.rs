//! Full localization check on a small synthetic suite: detect, match to ground
//! truth, compute maps, binarize, and compare outer thirds with middle thirds.
//!
//!     cargo run --release --example validate_suite -- [count]

use odsg::evaluation::{aggregate, evaluate_detection, match_to_gt, BinarizeConfig, Region};
use odsg::synthetic::{generate_scene, SceneSpec};
use odsg::{detect, odsmoothgrad_for, SaliencyTarget, SmoothGradConfig, SoftMomentDetector};

fn main() -> odsg::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let det = SoftMomentDetector::default();
    let cfg = SmoothGradConfig::default();
    let bin = BinarizeConfig::default();

    let mut records = Vec::new();
    for seed in 42..42 + count {
        let (image, truth) = generate_scene(&SceneSpec {
            seed,
            ..Default::default()
        })?;
        let dets = detect(&det, &image)?;
        let pairs = match_to_gt(&dets, &truth, 0.9, 0.5);
        let matched: Vec<_> = pairs.iter().map(|(d, _)| (*d).clone()).collect();
        for (ds, (_, gt)) in odsmoothgrad_for(&det, &image, &matched, &cfg)?.iter().zip(&pairs) {
            records.push(evaluate_detection(seed, ds, gt, &bin, image.height(), image.width())?);
        }
    }

    let stats = aggregate(&records);
    println!("{} matched detections from {count} scenes", stats.record_count);
    println!("param   side    median   middle  median");
    for t in SaliencyTarget::BOX_PARAMETERS {
        let side = Region::target_side(t);
        let mid = Region::background(t).expect("box parameter");
        let m = |r| stats.field(t, r).and_then(|f| f.median).unwrap_or(f64::NAN);
        println!("{t:<7} {:<7} {:.3}    {:<7} {:.3}", side.as_str(), m(side), mid.as_str(), m(mid));
    }
    let cls = stats.field(SaliencyTarget::Cls, Region::FullPolygon).and_then(|f| f.median);
    println!("cls inside polygon: median {:.3}", cls.unwrap_or(f64::NAN));
    Ok(())
}
