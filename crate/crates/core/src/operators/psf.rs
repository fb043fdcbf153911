//! Point spread functions and periodic blur.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

use super::spectral::{kernel_spectrum, Fft2d, Spectrum};

/// Square, odd-sized, non-negative blur kernel with unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psf {
    size: usize,
    taps: Vec<f64>,
    raw_sum: f64,
}

impl Psf {
    /// Validates and normalizes `taps` (row-major, `size × size`) to unit mass.
    /// The sum before normalization is kept in [`Psf::raw_sum`].
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::arg(format!("psf size must be odd and positive, got {size}")));
        }
        if taps.len() != size * size {
            return Err(Error::arg(format!(
                "psf of size {size} needs {} taps, got {}",
                size * size,
                taps.len()
            )));
        }
        if let Some(t) = taps.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::arg(format!("psf taps must be finite and non-negative, found {t}")));
        }
        let raw_sum: f64 = taps.iter().sum();
        if raw_sum <= 0.0 {
            return Err(Error::arg("psf has zero mass"));
        }
        let taps = taps.into_iter().map(|t| t / raw_sum).collect();
        Ok(Self {
            size,
            taps,
            raw_sum,
        })
    }

    /// The identity kernel of the given size.
    pub fn delta(size: usize) -> Result<Self> {
        let mut taps = vec![0.0; size * size];
        if size % 2 == 1 {
            taps[(size / 2) * size + size / 2] = 1.0;
        }
        Self::new(size, taps)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn raw_sum(&self) -> f64 {
        self.raw_sum
    }

    pub fn center(&self) -> usize {
        self.size / 2
    }

    #[inline]
    pub fn tap(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.size + col]
    }

    /// Taps as `(row_offset, col_offset, value)` relative to the centre.
    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let c = self.center() as isize;
        let n = self.size;
        self.taps
            .iter()
            .enumerate()
            .map(move |(i, &t)| ((i / n) as isize - c, (i % n) as isize - c, t))
    }

    /// The kernel rotated by 180°, i.e. the blur adjoint.
    pub fn flipped(&self) -> Psf {
        Psf {
            size: self.size,
            taps: self.taps.iter().rev().copied().collect(),
            raw_sum: self.raw_sum,
        }
    }

    pub fn ensure_fits(&self, width: usize, height: usize) -> Result<()> {
        if self.size > width.min(height) {
            return Err(Error::arg(format!(
                "psf of size {} does not fit a {width}x{height} image",
                self.size
            )));
        }
        Ok(())
    }

    /// Parses the text format: the side length on the first line, then
    /// `size` rows of `size` whitespace-separated reals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let size: usize = lines
            .next()
            .ok_or_else(|| Error::format("size", "empty psf file"))?
            .trim()
            .parse()
            .map_err(|e| Error::format("size", format!("{e}")))?;
        let mut taps = Vec::with_capacity(size * size);
        for row in 0..size {
            let line = lines
                .next()
                .ok_or_else(|| Error::format("taps", format!("missing row {row}")))?;
            let vals = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format("taps", format!("row {row}: {e}")))?;
            if vals.len() != size {
                return Err(Error::format(
                    "taps",
                    format!("row {row} has {} values, expected {size}", vals.len()),
                ));
            }
            taps.extend(vals);
        }
        if lines.next().is_some() {
            return Err(Error::format("taps", "trailing rows after the kernel"));
        }
        Self::new(size, taps)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.size);
        for row in self.taps.chunks(self.size) {
            let line: Vec<String> = row.iter().map(|t| format!("{t:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Kernel as an image (for inspection).
    pub fn to_image(&self) -> Image {
        Image::new(self.size, self.size, self.taps.clone()).expect("size is positive")
    }
}

/// Transfer function (OTF) of the blur: centre tap moved to the origin,
/// zero-padded to `width × height`, forward-transformed.
pub fn psf_to_spectrum(psf: &Psf, width: usize, height: usize) -> Result<Spectrum> {
    psf.ensure_fits(width, height)?;
    Ok(kernel_spectrum(psf.offsets(), width, height))
}

/// Circular convolution `H f` computed through the DFT.
pub fn convolve_periodic(f: &Image, psf: &Psf) -> Result<Image> {
    let (w, h) = f.dims();
    let otf = psf_to_spectrum(psf, w, h)?;
    let fft = Fft2d::new(w, h);
    Ok(fft.inverse_real(&otf.mul(&fft.forward(f))))
}

/// Adjoint blur `Hᵀ f`, convolution with the flipped kernel.
pub fn convolve_periodic_adjoint(f: &Image, psf: &Psf) -> Result<Image> {
    convolve_periodic(f, &psf.flipped())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(n²k²) circular convolution oracle.
    fn direct_convolve(f: &Image, psf: &Psf) -> Image {
        Image::from_fn(f.width(), f.height(), |r, c| {
            psf.offsets()
                .map(|(dr, dc, t)| t * f.get_wrapped(r as isize - dr, c as isize - dc))
                .sum()
        })
    }

    fn random_psf(rng: &mut ChaCha8Rng, size: usize) -> Psf {
        Psf::new(size, (0..size * size).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(Psf::new(2, vec![0.25; 4]).is_err());
        assert!(Psf::new(3, vec![0.0; 9]).is_err());
        assert!(Psf::new(3, vec![-1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        let p = Psf::new(3, vec![2.0; 9]).unwrap();
        assert!((p.taps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p.raw_sum(), 18.0);
    }

    #[test]
    fn delta_spectrum_is_one() {
        let s = psf_to_spectrum(&Psf::delta(5).unwrap(), 8, 6).unwrap();
        for z in s.values() {
            assert!((z.re - 1.0).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn dc_gain_is_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_psf(&mut rng, 7);
        let s = psf_to_spectrum(&p, 16, 16).unwrap();
        assert!((s.at(0, 0).re - 1.0).abs() < 1e-12);
        assert!(s.at(0, 0).im.abs() < 1e-12);
    }

    #[test]
    fn oversized_kernel_rejected() {
        let p = Psf::delta(7).unwrap();
        assert!(psf_to_spectrum(&p, 6, 10).is_err());
        assert!(convolve_periodic(&Image::zeros(10, 6), &p).is_err());
    }

    #[test]
    fn spectral_matches_direct_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = Image::from_fn(16, 16, |_, _| rng.random_range(0.0..255.0));
        let p = random_psf(&mut rng, 5);
        let fast = convolve_periodic(&f, &p).unwrap();
        let slow = direct_convolve(&f, &p);
        let diff = fast.zip_map(&slow, |a, b| a - b).norm();
        assert!(diff <= 1e-10 * slow.norm());
    }

    #[test]
    fn delta_and_constant_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = Image::from_fn(9, 9, |_, _| rng.random_range(0.0..255.0));
        let out = convolve_periodic(&f, &Psf::delta(3).unwrap()).unwrap();
        for (a, b) in f.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-10);
        }
        let c = Image::filled(9, 9, 77.0);
        let out = convolve_periodic(&c, &random_psf(&mut rng, 5)).unwrap();
        assert!(out.data().iter().all(|&x| (x - 77.0).abs() < 1e-10));
    }

    #[test]
    fn blur_preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let f = Image::from_fn(20, 12, |_, _| rng.random_range(0.0..255.0));
        let out = convolve_periodic(&f, &random_psf(&mut rng, 9)).unwrap();
        assert!((out.mean() - f.mean()).abs() < 1e-10);
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let p = random_psf(&mut rng, 5);
        assert_eq!(Psf::parse(&p.to_text()).unwrap().taps(), p.taps());
        assert!(matches!(
            Psf::parse("3\n1 2 3\n4 5\n7 8 9\n"),
            Err(Error::Format { field: "taps", .. })
        ));
        assert!(matches!(Psf::parse("x\n"), Err(Error::Format { field: "size", .. })));
        let loaded = Psf::parse("3\n0 0 0\n0 4 0\n0 0 0\n").unwrap();
        assert_eq!(loaded.raw_sum(), 4.0);
        assert_eq!(loaded.tap(1, 1), 1.0);
    }
}
