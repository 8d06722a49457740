//! Five SmoothGrad maps per detection, written as ODSG files and overlays.
//!
//!     cargo run --release --example smoothgrad_maps -- [out_dir]

use std::path::PathBuf;

use odsg::mapio::write_map;
use odsg::render::detection_panels;
use odsg::synthetic::{generate_scene, SceneSpec};
use odsg::{odsmoothgrad, SmoothGradConfig, SoftMomentDetector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "smoothgrad-out".into()));
    std::fs::create_dir_all(&out)?;
    let (image, _) = generate_scene(&SceneSpec {
        seed: 21,
        ..Default::default()
    })?;
    image.write_png(out.join("scene.png"))?;

    let maps = odsmoothgrad(&SoftMomentDetector::default(), &image, &SmoothGradConfig::default())?;
    for ds in &maps {
        let b = ds.detection.bbox;
        println!("det {} box [{:.1} {:.1} {:.1} {:.1}]", ds.detection.id, b.xmin, b.ymin, b.xmax, b.ymax);
        for t in &ds.targets {
            let Ok(map) = &t.map else {
                println!("  {:>4}: alignment failed", t.target);
                continue;
            };
            let (cx, cy) = map.centroid().unwrap_or((f64::NAN, f64::NAN));
            println!("  {:>4}: centroid ({cx:5.1}, {cy:5.1})  max {:.4}  {}/20 passes", t.target, map.max(), t.matched_samples);
            write_map(out.join(format!("det{}_{}.odsg", ds.detection.id, t.target)), map)?;
        }
        detection_panels(&image, ds, 0.5).save(out.join(format!("det{}.png", ds.detection.id)))?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
