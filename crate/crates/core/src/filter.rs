//! Separable Gaussian smoothing on row-major `f64` grids.
//!
//! Kernel radius is `ceil(3σ)`, taps are renormalized to sum to one and the
//! border is handled by half-sample symmetric reflection (`d c b a | a b c d`).

/// Normalized 1-D Gaussian taps, length `2 * ceil(3σ) + 1`. `σ = 0` yields `[1]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    taps
}

/// Maps an out-of-range index onto `0..len` by symmetric reflection.
pub(crate) fn reflect(index: i64, len: usize) -> usize {
    let n = len as i64;
    let period = 2 * n;
    let mut i = index.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Separable Gaussian convolution of a `height × width` grid.
pub fn gaussian_smooth(values: &[f64], height: usize, width: usize, sigma: f64) -> Vec<f64> {
    assert_eq!(values.len(), height * width, "grid shape mismatch");
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as i64;

    let mut rows = vec![0.0; values.len()];
    for r in 0..height {
        let line = &values[r * width..(r + 1) * width];
        for c in 0..width {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let src = reflect(c as i64 + k as i64 - radius, width);
                acc += t * line[src];
            }
            rows[r * width + c] = acc;
        }
    }

    let mut out = vec![0.0; values.len()];
    for c in 0..width {
        for r in 0..height {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let src = reflect(r as i64 + k as i64 - radius, height);
                acc += t * rows[src * width + c];
            }
            out[r * width + c] = acc;
        }
    }
    out
}
