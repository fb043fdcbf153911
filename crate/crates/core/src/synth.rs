//! Deterministic synthetic test scenes.

use std::f64::consts::PI;

use crate::image::Image;

/// Two flat halves split by a vertical edge at `width / 2`. Under periodic
/// boundaries the seam between the last and first column is an edge too.
pub fn step_edge(width: usize, height: usize, low: f64, high: f64) -> Image {
    Image::from_fn(width, height, |_, c| if c < width / 2 { low } else { high })
}

/// `(band, flat)` masks for [`step_edge`]: pixels within `band` columns of
/// either edge, and every other pixel.
pub fn edge_band_masks(width: usize, height: usize, band: usize) -> (Vec<bool>, Vec<bool>) {
    let mid = width / 2;
    let dist = |c: usize| -> usize {
        let to_mid = if c >= mid { c - mid } else { mid - 1 - c };
        let to_seam = c.min(width - 1 - c);
        to_mid.min(to_seam)
    };
    let mut inside = Vec::with_capacity(width * height);
    for _ in 0..height {
        for c in 0..width {
            inside.push(dist(c) < band);
        }
    }
    let flat = inside.iter().map(|b| !b).collect();
    (inside, flat)
}

/// Piecewise-constant scene: rectangles, a disk, a triangle and thin bars.
pub fn shapes(width: usize, height: usize) -> Image {
    let (w, h) = (width as f64, height as f64);
    Image::from_fn(width, height, |r, c| {
        let (y, x) = ((r as f64 + 0.5) / h, (c as f64 + 0.5) / w);
        let mut v = 50.0;
        if (0.12..0.45).contains(&x) && (0.1..0.38).contains(&y) {
            v = 210.0;
        }
        if (x - 0.68).hypot(y - 0.3) < 0.18 {
            v = 130.0;
        }
        // triangle with apex at (0.3, 0.55)
        if y > 0.55 && y < 0.9 && (x - 0.3).abs() < (y - 0.55) * 0.6 {
            v = 175.0;
        }
        if (0.6..0.9).contains(&x) && (0.62..0.88).contains(&y) {
            v = 90.0;
            // thin bright bars inside the dark block
            if ((x - 0.6) * w) as usize % 6 < 2 {
                v = 235.0;
            }
        }
        v
    })
}

/// Smoothly shaded scene with oscillating texture and a few sharp edges.
pub fn texture(width: usize, height: usize) -> Image {
    let (w, h) = (width as f64, height as f64);
    Image::from_fn(width, height, |r, c| {
        let (y, x) = ((r as f64 + 0.5) / h, (c as f64 + 0.5) / w);
        let mut v = 70.0 + 90.0 * x + 30.0 * (2.0 * PI * y).sin();
        let d = (x - 0.35).hypot(y - 0.4);
        if d < 0.25 {
            v = 150.0 + 45.0 * (2.0 * PI * 9.0 * d).cos();
        }
        let blob = (-((x - 0.75).powi(2) + (y - 0.72).powi(2)) / 0.008).exp();
        v += 70.0 * blob;
        if (0.65..0.92).contains(&x) && (0.1..0.35).contains(&y) {
            let chk = (((x * w) as usize / 4) + ((y * h) as usize / 4)) % 2;
            v = if chk == 0 { 30.0 } else { 220.0 };
        }
        v.clamp(0.0, 255.0)
    })
}

/// Named scene lookup used by the command-line harness.
pub fn by_name(name: &str, width: usize, height: usize) -> Option<Image> {
    match name {
        "shapes" => Some(shapes(width, height)),
        "texture" => Some(texture(width, height)),
        "step" => Some(step_edge(width, height, 40.0, 200.0)),
        _ => None,
    }
}
