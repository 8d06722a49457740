//! Closed-form input gradients against central finite differences.

use odsg::detector::finite_diff_at;
use odsg::synthetic::{generate_scene, SceneSpec};
use odsg::{detect, input_gradient, SaliencyTarget, SoftMomentDetector};

fn main() -> odsg::Result<()> {
    let (image, _) = generate_scene(&SceneSpec {
        seed: 3,
        n_blobs: 1,
        ..Default::default()
    })?;
    let det = SoftMomentDetector::default();
    let d = &detect(&det, &image)?[0];
    let smoothed = det.smoothed_intensity(&image);
    let w = image.width();

    // a row through the middle of the box; skip pixels whose perturbation
    // could flip the foreground threshold, and dark pixels sitting on the
    // kink of max(G, 0)
    let row = ((d.bbox.ymin + d.bbox.ymax) / 2.0) as usize;
    let cols = (d.bbox.xmin.floor() as usize).saturating_sub(2)..(d.bbox.xmax.ceil() as usize + 2).min(w);
    let entries: Vec<_> = cols
        .filter(|&c| image.get(row, c, 0) > 2e-3 && det.structurally_stable(&smoothed, w, row, c, 1e-2))
        .map(|c| (row, c, 0))
        .collect();

    for target in SaliencyTarget::ALL {
        let analytic = input_gradient(&det, &image, d, target)?;
        let numeric = finite_diff_at(&det, &image, d, target, 1e-3, &entries)?;
        let worst = entries
            .iter()
            .zip(&numeric)
            .map(|(&(r, c, ch), fd)| {
                let a = analytic.get(r, c, ch);
                let scale = a.abs().max(fd.abs());
                if scale > 1e-10 { (a - fd).abs() / scale } else { 0.0 }
            })
            .fold(0.0, f64::max);
        println!("{target:>5}: {} pixels on row {row}, max relative error {worst:.2e}", entries.len());
    }
    Ok(())
}
