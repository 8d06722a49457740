//! Plugging a detector into the saliency engine.
//!
//! `CentroidBox` reports one fixed-size box around the intensity centroid.
//! Its gradients are closed form, so the finite-difference harness can check
//! the implementation before it is used for SmoothGrad.

use odsg::detector::{finite_diff_at, Capabilities, TargetHandle};
use odsg::{
    detect, odsmoothgrad, BBox, Detection, DetectorAdapter, Error, GradientImage, Image, SaliencyTarget,
    SmoothGradConfig,
};

const HALF: f64 = 8.0;

struct CentroidBox;

impl CentroidBox {
    /// Intensity mass and centroid over positive intensities.
    fn moments(image: &Image) -> Option<(f64, f64, f64)> {
        let (h, w) = image.dims();
        let g = image.intensity();
        let (mut m, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for r in 0..h {
            for c in 0..w {
                let v = g[r * w + c].max(0.0);
                m += v;
                sx += v * (c as f64 + 0.5);
                sy += v * (r as f64 + 0.5);
            }
        }
        (m > 0.0).then(|| (m, sx / m, sy / m))
    }
}

impl DetectorAdapter for CentroidBox {
    fn name(&self) -> &str {
        "centroid-box"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            reentrant_gradients: true,
        }
    }

    fn detect(&self, image: &Image) -> odsg::Result<Vec<Detection>> {
        let Some((_, cx, cy)) = Self::moments(image) else {
            return Ok(Vec::new());
        };
        Ok(vec![Detection {
            id: 0,
            bbox: BBox::new(cx - HALF, cy - HALF, cx + HALF, cy + HALF)?,
            class_id: 0,
            score: 0.95,
            handle: TargetHandle {
                pass: image.fingerprint(),
                index: 0,
            },
        }])
    }

    fn input_gradient(&self, image: &Image, handle: &TargetHandle, target: SaliencyTarget) -> odsg::Result<GradientImage> {
        if handle.pass != image.fingerprint() || handle.index != 0 {
            return Err(Error::InvalidHandle);
        }
        let (m, cx, cy) = Self::moments(image).ok_or(Error::InvalidHandle)?;
        let (h, w, ch) = (image.height(), image.width(), image.channels());
        let g = image.intensity();
        let mut grad = GradientImage::like(image);
        for r in 0..h {
            for c in 0..w {
                if g[r * w + c] <= 0.0 {
                    continue;
                }
                // d(centroid)/d(pixel) through the channel mean
                let v = match target {
                    SaliencyTarget::Xmin | SaliencyTarget::Xmax => (c as f64 + 0.5 - cx) / m,
                    SaliencyTarget::Ymin | SaliencyTarget::Ymax => (r as f64 + 0.5 - cy) / m,
                    SaliencyTarget::Cls => 0.0,
                } / ch as f64;
                for k in 0..ch {
                    grad.set(r, c, k, v);
                }
            }
        }
        Ok(grad)
    }
}

fn main() -> odsg::Result<()> {
    let mut image = Image::zeros(48, 48, 1)?;
    for r in 10..30 {
        for c in 14..26 {
            image.set(r, c, 0, 0.3 + 0.02 * (c - 14) as f64);
        }
    }
    let adapter = CentroidBox;
    let d = &detect(&adapter, &image)?[0];
    println!("box [{:.2} {:.2} {:.2} {:.2}]", d.bbox.xmin, d.bbox.ymin, d.bbox.xmax, d.bbox.ymax);

    let probe = [(12, 15, 0), (20, 20, 0), (28, 25, 0)];
    let analytic = odsg::input_gradient(&adapter, &image, d, SaliencyTarget::Xmin)?;
    let numeric = finite_diff_at(&adapter, &image, d, SaliencyTarget::Xmin, 1e-4, &probe)?;
    for (&(r, c, k), fd) in probe.iter().zip(numeric) {
        println!("d xmin / d px({r},{c}): analytic {:+.6e}  finite diff {fd:+.6e}", analytic.get(r, c, k));
    }

    let cfg = SmoothGradConfig {
        n_samples: 8,
        ..Default::default()
    };
    let maps = odsmoothgrad(&adapter, &image, &cfg)?;
    let xmin = maps[0].map(SaliencyTarget::Xmin).expect("aligned");
    println!(
        "xmin SmoothGrad: max {:.3e}, {} of 8 passes aligned",
        xmin.max(),
        maps[0].targets[0].matched_samples
    );
    Ok(())
}
