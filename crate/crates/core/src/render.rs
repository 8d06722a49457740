//! Presentation-only rasters: heatmap overlays and violin figures.
//!
//! Nothing here feeds back into analysis; the ODSG files hold the values.

use image::{Rgb, RgbImage};

use crate::detector::SaliencyTarget;
use crate::geometry::BBox;
use crate::image::Image;
use crate::saliency::{DetectionSaliency, SaliencyMap};

const PANEL_GAP: u32 = 4;
/// Panels are upscaled (nearest neighbour) until the longer side reaches this.
const PANEL_MIN_SIDE: u32 = 256;
const GAP_COLOR: Rgb<u8> = Rgb([255, 255, 255]);
const BOX_COLOR: Rgb<u8> = Rgb([0, 200, 255]);

/// Black → red → yellow → white ramp for `v` in `[0, 1]`.
pub fn hot(v: f64) -> Rgb<u8> {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let ch = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    Rgb([ch(3.0 * v), ch(3.0 * v - 1.0), ch(3.0 * v - 2.0)])
}

/// Per-map max-normalized heatmap.
pub fn heatmap(map: &SaliencyMap) -> RgbImage {
    let max = map.max();
    let norm = if max > 0.0 { 1.0 / max } else { 0.0 };
    RgbImage::from_fn(map.width() as u32, map.height() as u32, |c, r| {
        hot(map.get(r as usize, c as usize) * norm)
    })
}

/// Heatmap alpha-blended over the grayscale image.
pub fn overlay(image: &Image, map: &SaliencyMap, alpha: f64) -> RgbImage {
    let gray = image.to_gray8();
    let mut heat = heatmap(map);
    for (px, g) in heat.pixels_mut().zip(gray.pixels()) {
        for k in 0..3 {
            let v = alpha * f64::from(px.0[k]) + (1.0 - alpha) * f64::from(g.0[0]);
            px.0[k] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    heat
}

/// One-pixel rectangle outline along the pixel-edge box, clipped to the raster.
pub fn draw_box(canvas: &mut RgbImage, bbox: &BBox, color: Rgb<u8>) {
    let (w, h) = (canvas.width() as i64, canvas.height() as i64);
    let x0 = bbox.xmin.floor() as i64;
    let y0 = bbox.ymin.floor() as i64;
    let x1 = bbox.xmax.ceil() as i64 - 1;
    let y1 = bbox.ymax.ceil() as i64 - 1;
    let mut put = |x: i64, y: i64| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            canvas.put_pixel(x as u32, y as u32, color);
        }
    };
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
}

/// Five overlays side by side in [`SaliencyTarget::ALL`] order, each with the
/// detection box. A target without a map shows the bare image.
pub fn detection_panels(image: &Image, ds: &DetectionSaliency, alpha: f64) -> RgbImage {
    let longest = image.width().max(image.height()) as u32;
    let zoom = PANEL_MIN_SIDE.div_ceil(longest).max(1);
    let (w, h) = (zoom * image.width() as u32, zoom * image.height() as u32);
    let b = &ds.detection.bbox;
    let z = f64::from(zoom);
    let zoomed_box = BBox {
        xmin: b.xmin * z,
        ymin: b.ymin * z,
        xmax: b.xmax * z,
        ymax: b.ymax * z,
    };
    let n = SaliencyTarget::ALL.len() as u32;
    let mut canvas = RgbImage::from_pixel(n * w + (n - 1) * PANEL_GAP, h, GAP_COLOR);
    let bare = image.to_rgb8();
    for (k, target) in SaliencyTarget::ALL.into_iter().enumerate() {
        let native = match ds.map(target) {
            Some(map) => overlay(image, map, alpha),
            None => bare.clone(),
        };
        let mut panel = image::imageops::resize(&native, w, h, image::imageops::FilterType::Nearest);
        draw_box(&mut panel, &zoomed_box, BOX_COLOR);
        let x_off = k as u32 * (w + PANEL_GAP);
        for (x, y, px) in panel.enumerate_pixels() {
            canvas.put_pixel(x + x_off, y, *px);
        }
    }
    canvas
}

const VIOLIN_WIDTH: u32 = 120;
const VIOLIN_HEIGHT: u32 = 240;
const MARGIN: u32 = 20;
const FILLS: [Rgb<u8>; 2] = [Rgb([214, 96, 77]), Rgb([120, 150, 200])];
const INK: Rgb<u8> = Rgb([30, 30, 30]);

fn kde(values: &[f64], bandwidth: f64, y: f64) -> f64 {
    let inv = 1.0 / bandwidth;
    values
        .iter()
        .map(|v| {
            let z = (y - v) * inv;
            (-0.5 * z * z).exp()
        })
        .sum::<f64>()
        * inv
        / values.len() as f64
}

fn silverman(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let h = 1.06 * var.sqrt() * n.powf(-0.2);
    if h > 1e-3 { h } else { 0.02 }
}

fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let s = crate::evaluation::FieldStats::from_values(values.to_vec());
    (
        s.q25.unwrap_or(0.0),
        s.median.unwrap_or(0.0),
        s.q75.unwrap_or(0.0),
    )
}

/// Violins with inner box plots for value groups on a fixed `[0, 1]` axis,
/// one column per group. Empty groups leave their column blank.
pub fn violin_figure(groups: &[&[f64]]) -> RgbImage {
    let n = groups.len().max(1) as u32;
    let width = 2 * MARGIN + n * VIOLIN_WIDTH;
    let height = 2 * MARGIN + VIOLIN_HEIGHT;
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    let row_of = |v: f64| MARGIN as f64 + (1.0 - v.clamp(0.0, 1.0)) * (VIOLIN_HEIGHT - 1) as f64;

    // axis with ticks at 0, 0.25, ..., 1
    for y in MARGIN..MARGIN + VIOLIN_HEIGHT {
        img.put_pixel(MARGIN - 4, y, INK);
    }
    for k in 0..=4 {
        let y = row_of(k as f64 / 4.0).round() as u32;
        for x in MARGIN - 8..MARGIN - 4 {
            img.put_pixel(x, y, INK);
        }
    }

    for (g, values) in groups.iter().enumerate() {
        if values.is_empty() {
            continue;
        }
        let center = (MARGIN + g as u32 * VIOLIN_WIDTH + VIOLIN_WIDTH / 2) as f64;
        let bw = silverman(values);
        let density: Vec<f64> = (0..VIOLIN_HEIGHT)
            .map(|r| kde(values, bw, 1.0 - r as f64 / (VIOLIN_HEIGHT - 1) as f64))
            .collect();
        let peak = density.iter().cloned().fold(0.0, f64::max);
        let lo_v = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_v = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let in_range = |r: usize| {
            let v = 1.0 - r as f64 / (VIOLIN_HEIGHT - 1) as f64;
            v >= lo_v - 0.5 / VIOLIN_HEIGHT as f64 && v <= hi_v + 0.5 / VIOLIN_HEIGHT as f64
        };
        let half = 0.45 * VIOLIN_WIDTH as f64;
        for (r, d) in density.iter().enumerate().filter(|(r, _)| in_range(*r)) {
            let extent = if peak > 0.0 { d / peak * half } else { 0.0 };
            let lo = (center - extent).round() as u32;
            let hi = (center + extent).round() as u32;
            for x in lo..=hi {
                img.put_pixel(x, MARGIN + r as u32, FILLS[g % FILLS.len()]);
            }
        }

        let (q25, median, q75) = quartiles(values);
        let box_half = 6u32;
        let cx = center.round() as u32;
        let (top, bottom) = (row_of(q75).round() as u32, row_of(q25).round() as u32);
        for y in top..=bottom {
            img.put_pixel(cx - box_half, y, INK);
            img.put_pixel(cx + box_half, y, INK);
        }
        for x in cx - box_half..=cx + box_half {
            img.put_pixel(x, top, INK);
            img.put_pixel(x, bottom, INK);
            img.put_pixel(x, row_of(median).round() as u32, Rgb([255, 255, 255]));
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_is_monotone() {
        let mut prev = 0u32;
        for k in 0..=100 {
            let Rgb([r, g, b]) = hot(k as f64 / 100.0);
            let sum = u32::from(r) + u32::from(g) + u32::from(b);
            assert!(sum >= prev);
            prev = sum;
        }
        assert_eq!(hot(0.0), Rgb([0, 0, 0]));
        assert_eq!(hot(1.0), Rgb([255, 255, 255]));
        assert_eq!(hot(f64::NAN), Rgb([0, 0, 0]));
    }

    #[test]
    fn heatmap_normalizes_per_map() {
        let m = SaliencyMap::new(1, 2, vec![0.0, 4.0]).unwrap();
        let h = heatmap(&m);
        assert_eq!(*h.get_pixel(1, 0), Rgb([255, 255, 255]));
        assert_eq!(heatmap(&m.scaled(3.0).unwrap()), h);
        let z = heatmap(&SaliencyMap::zeros(2, 2));
        assert!(z.pixels().all(|p| *p == Rgb([0, 0, 0])));
    }

    #[test]
    fn box_outline_is_clipped() {
        let mut c = RgbImage::new(10, 10);
        draw_box(&mut c, &BBox::new(2.0, 3.0, 6.0, 14.0).unwrap(), BOX_COLOR);
        assert_eq!(*c.get_pixel(2, 3), BOX_COLOR);
        assert_eq!(*c.get_pixel(5, 9), BOX_COLOR);
        assert_eq!(*c.get_pixel(3, 5), Rgb([0, 0, 0]));
    }

    #[test]
    fn violin_dimensions() {
        let a = [0.1, 0.2, 0.8, 0.9];
        let img = violin_figure(&[&a, &[]]);
        assert_eq!(img.dimensions(), (2 * MARGIN + 2 * VIOLIN_WIDTH, 2 * MARGIN + VIOLIN_HEIGHT));
        // the empty column stays blank
        let x = MARGIN + VIOLIN_WIDTH + VIOLIN_WIDTH / 2;
        assert!((MARGIN..MARGIN + VIOLIN_HEIGHT).all(|y| *img.get_pixel(x, y) == Rgb([255, 255, 255])));
    }
}
