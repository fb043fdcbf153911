//! Image-quality measures: mean structural similarity and PSNR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ColorImage, Image};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimConfig {
    pub window_size: usize,
    pub window_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window_size: 11,
            window_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn window(&self) -> Vec<f64> {
        let half = (self.window_size / 2) as isize;
        let s = self.window_sigma;
        let taps: Vec<f64> = (-half..=half)
            .map(|x| (-((x * x) as f64) / (2.0 * s * s)).exp())
            .collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size == 0 || self.window_size % 2 == 0 {
            return Err(Error::arg("ssim window size must be odd"));
        }
        if !(self.window_sigma > 0.0) || !(self.c1() > 0.0) || !(self.c2() > 0.0) {
            return Err(Error::arg("ssim window sigma and stabilizers must be positive"));
        }
        Ok(())
    }
}

/// Separable "valid" filtering: output is `(h − k + 1) × (w − k + 1)`.
fn filter_valid(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut rows = vec![0.0; h * ow];
    for r in 0..h {
        for c in 0..ow {
            rows[r * ow + c] = taps.iter().enumerate().map(|(j, t)| t * data[r * w + c + j]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = taps.iter().enumerate().map(|(i, t)| t * rows[(r + i) * ow + c]).sum();
        }
    }
    out
}

/// Local SSIM over every window position fully inside the image.
pub fn ssim_map(reference: &Image, test: &Image, cfg: &SsimConfig) -> Result<Image> {
    cfg.validate()?;
    if !reference.same_dims(test) {
        return Err(Error::arg(format!(
            "ssim inputs differ in size: {:?} vs {:?}",
            reference.dims(),
            test.dims()
        )));
    }
    let (w, h) = reference.dims();
    let k = cfg.window_size;
    if w < k || h < k {
        return Err(Error::arg(format!("images smaller than the {k}x{k} ssim window")));
    }
    let taps = cfg.window();
    let (x, y) = (reference.data(), test.data());
    let prod = |f: &dyn Fn(usize) -> f64| (0..w * h).map(f).collect::<Vec<f64>>();
    let mx = filter_valid(x, w, h, &taps);
    let my = filter_valid(y, w, h, &taps);
    let mxx = filter_valid(&prod(&|i| x[i] * x[i]), w, h, &taps);
    let myy = filter_valid(&prod(&|i| y[i] * y[i]), w, h, &taps);
    let mxy = filter_valid(&prod(&|i| x[i] * y[i]), w, h, &taps);
    let (c1, c2) = (cfg.c1(), cfg.c2());
    let map = (0..mx.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let sxx = mxx[i] - ux * ux;
            let syy = myy[i] - uy * uy;
            let sxy = mxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * sxy + c2))
                / ((ux * ux + uy * uy + c1) * (sxx + syy + c2))
        })
        .collect();
    Image::new(w + 1 - k, h + 1 - k, map)
}

/// Mean of [`ssim_map`].
pub fn mssim(reference: &Image, test: &Image, cfg: &SsimConfig) -> Result<f64> {
    Ok(ssim_map(reference, test, cfg)?.mean())
}

/// Per-plane mean of [`mssim`].
pub fn mssim_color(reference: &ColorImage, test: &ColorImage, cfg: &SsimConfig) -> Result<f64> {
    if reference.num_planes() != test.num_planes() {
        return Err(Error::arg("colour images differ in plane count"));
    }
    let total = reference
        .planes()
        .iter()
        .zip(test.planes())
        .map(|(a, b)| mssim(a, b, cfg))
        .sum::<Result<f64>>()?;
    Ok(total / reference.num_planes() as f64)
}

/// Mean squared difference.
pub fn mse(reference: &Image, test: &Image) -> Result<f64> {
    if !reference.same_dims(test) {
        return Err(Error::arg("mse inputs differ in size"));
    }
    Ok(reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64)
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical inputs.
pub fn psnr(reference: &Image, test: &Image, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, test)?, peak))
}

/// PSNR of the MSE pooled over all planes.
pub fn psnr_color(reference: &ColorImage, test: &ColorImage, peak: f64) -> Result<f64> {
    if reference.num_planes() != test.num_planes() {
        return Err(Error::arg("colour images differ in plane count"));
    }
    let total = reference
        .planes()
        .iter()
        .zip(test.planes())
        .map(|(a, b)| mse(a, b))
        .sum::<Result<f64>>()?;
    Ok(psnr_from_mse(total / reference.num_planes() as f64, peak))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn random_image(seed: u64, w: usize, h: usize) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random_range(0.0..255.0))
    }

    #[test]
    fn identical_images_score_one() {
        let x = random_image(1, 20, 17);
        let cfg = SsimConfig::default();
        let map = ssim_map(&x, &x, &cfg).unwrap();
        assert_eq!(map.dims(), (10, 7));
        assert!(map.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((mssim(&x, &x, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_closed_form() {
        let cfg = SsimConfig::default();
        let (c, d) = (100.0, 20.0);
        let a = Image::filled(16, 16, c);
        let b = Image::filled(16, 16, c + d);
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = (2.0 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1);
        for v in ssim_map(&a, &b, &cfg).unwrap().data() {
            assert!((v - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn antithetic_pair_is_negative() {
        let x = Image::from_fn(16, 16, |r, c| if (r + c) % 2 == 0 { 0.0 } else { 255.0 });
        let y = x.map(|v| 255.0 - v);
        let map = ssim_map(&x, &y, &SsimConfig::default()).unwrap();
        assert!(map.data().iter().all(|&v| v < 0.0));
    }

    #[test]
    fn symmetric_and_bounded() {
        let cfg = SsimConfig::default();
        let a = random_image(2, 24, 24);
        let b = random_image(3, 24, 24);
        let ab = mssim(&a, &b, &cfg).unwrap();
        let ba = mssim(&b, &a, &cfg).unwrap();
        assert!((ab - ba).abs() < 1e-15);
        assert!(ab.abs() <= 1.0);
    }

    #[test]
    fn translation_invariance() {
        let cfg = SsimConfig::default();
        let a = random_image(4, 30, 28);
        let b = a.zip_map(&random_image(5, 30, 28), |x, n| 0.7 * x + 0.3 * n);
        let base = mssim(&a, &b, &cfg).unwrap();
        // shifting both images moves the valid region; compare on the
        // valid-window map restricted to positions unaffected by the wrap
        let (dr, dc) = (3, 2);
        let m0 = ssim_map(&a, &b, &cfg).unwrap();
        let m1 = ssim_map(&a.shifted(dr, dc), &b.shifted(dr, dc), &cfg).unwrap();
        for r in 0..m0.height() - dr as usize {
            for c in 0..m0.width() - dc as usize {
                assert!((m0.get(r, c) - m1.get(r + dr as usize, c + dc as usize)).abs() < 1e-12);
            }
        }
        assert!(base < 1.0);
    }

    #[test]
    fn noise_monotonically_lowers_mssim() {
        let cfg = SsimConfig::default();
        let x = crate::synth::texture(64, 64);
        let mut last = 1.0;
        for sigma in [1.0, 2.0, 5.0, 10.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let n = Normal::new(0.0, sigma).unwrap();
            let noisy = x.data().iter().map(|v| v + n.sample(&mut rng)).collect();
            let y = Image::new(64, 64, noisy).unwrap();
            let s = mssim(&x, &y, &cfg).unwrap();
            assert!(s < last, "sigma {sigma}: {s} !< {last}");
            last = s;
        }
    }

    #[test]
    fn errors_on_mismatch() {
        let cfg = SsimConfig::default();
        assert!(ssim_map(&Image::zeros(12, 12), &Image::zeros(13, 12), &cfg).is_err());
        assert!(ssim_map(&Image::zeros(8, 8), &Image::zeros(8, 8), &cfg).is_err());
        assert!(psnr(&Image::zeros(3, 3), &Image::zeros(4, 3), 255.0).is_err());
    }

    #[test]
    fn psnr_cases() {
        let a = random_image(6, 10, 10);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        let b = a.map(|v| v + 1.0);
        let p = psnr(&a, &b, 255.0).unwrap();
        assert!((p - 48.1308).abs() < 1e-4);
        // permuting pixels of both images identically leaves the MSE alone
        let rev = |img: &Image| Image::new(10, 10, img.data().iter().rev().copied().collect()).unwrap();
        assert!((psnr(&rev(&a), &rev(&b.map(|v| v * 1.01)), 255.0).unwrap()
            - psnr(&a, &b.map(|v| v * 1.01), 255.0).unwrap())
        .abs()
            < 1e-12);
    }

    #[test]
    fn color_is_plane_mean() {
        let cfg = SsimConfig::default();
        let p: Vec<Image> = (0..3).map(|s| random_image(10 + s, 16, 16)).collect();
        let q: Vec<Image> = (0..3).map(|s| random_image(20 + s, 16, 16)).collect();
        let expected = (0..3).map(|i| mssim(&p[i], &q[i], &cfg).unwrap()).sum::<f64>() / 3.0;
        let got = mssim_color(&ColorImage::new(p).unwrap(), &ColorImage::new(q).unwrap(), &cfg).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }
}
