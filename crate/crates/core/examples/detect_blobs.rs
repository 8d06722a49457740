//! Runs the soft-moment detector on a seeded synthetic scene and compares the
//! boxes with the ground truth.
//!
//!     cargo run --example detect_blobs -- [seed]

use odsg::synthetic::{generate_scene, SceneSpec};
use odsg::{detect, iou, SoftMomentDetector};

fn main() -> odsg::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let spec = SceneSpec {
        seed,
        n_blobs: 3,
        ..Default::default()
    };
    let (image, truth) = generate_scene(&spec)?;
    let detector = SoftMomentDetector::default();

    println!("scene {seed}: {}x{}", image.width(), image.height());
    for d in detect(&detector, &image)? {
        let best = truth
            .iter()
            .map(|g| iou(&d.bbox, &g.bbox))
            .fold(0.0, f64::max);
        println!(
            "det {}  score {:.3}  box [{:6.2} {:6.2} {:6.2} {:6.2}]  best gt iou {:.3}",
            d.id, d.score, d.bbox.xmin, d.bbox.ymin, d.bbox.xmax, d.bbox.ymax, best
        );
    }
    for g in &truth {
        let b = g.bbox;
        println!("gt  {}               box [{:6.2} {:6.2} {:6.2} {:6.2}]", g.instance_id, b.xmin, b.ymin, b.xmax, b.ymax);
    }
    Ok(())
}
