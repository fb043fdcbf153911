//! Forward model `g = Hf + ε`: kernel synthesis, periodic blur, seeded Gaussian noise.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::operators::{convolve_periodic, Psf};

/// Recorded next to every noisy output so reruns are comparable.
pub const NOISE_GENERATOR: &str = "ChaCha20Rng + rand_distr::Normal (ziggurat)";

/// Supersampling factor per axis for coverage-weighted kernels.
const COVERAGE_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PsfKind {
    Delta,
    /// Sampled isotropic Gaussian.
    Gaussian { std: f64 },
    /// Unit-width line segment through the centre; angle in degrees,
    /// counter-clockwise from the +x axis.
    Motion { length: f64, angle: f64 },
    /// Uniform disk.
    Disk { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfSpec {
    #[serde(flatten)]
    pub kind: PsfKind,
    pub size: usize,
}

impl PsfSpec {
    pub fn build(&self) -> Result<Psf> {
        make_psf(self.kind, self.size)
    }
}

impl fmt::Display for PsfSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PsfKind::Delta => write!(f, "delta:{}", self.size),
            PsfKind::Gaussian { std } => write!(f, "gaussian:{}:{}", self.size, std),
            PsfKind::Motion { length, angle } => {
                write!(f, "motion:{}:{}:{}", self.size, length, angle)
            }
            PsfKind::Disk { radius } => write!(f, "disk:{}:{}", self.size, radius),
        }
    }
}

impl FromStr for PsfSpec {
    type Err = Error;

    /// `delta:SIZE`, `gaussian:SIZE:STD`, `motion:SIZE:LENGTH:ANGLE`, `disk:SIZE:RADIUS`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::arg(format!("psf spec {s:?} is missing field {i}")))?
                .parse::<f64>()
                .map_err(|e| Error::arg(format!("psf spec {s:?}: {e}")))
        };
        let size = parts
            .get(1)
            .ok_or_else(|| Error::arg(format!("psf spec {s:?} has no size")))?
            .parse::<usize>()
            .map_err(|e| Error::arg(format!("psf spec {s:?}: {e}")))?;
        let (kind, arity) = match parts[0] {
            "delta" => (PsfKind::Delta, 2),
            "gaussian" => (PsfKind::Gaussian { std: num(2)? }, 3),
            "motion" => (
                PsfKind::Motion {
                    length: num(2)?,
                    angle: num(3)?,
                },
                4,
            ),
            "disk" => (PsfKind::Disk { radius: num(2)? }, 3),
            other => return Err(Error::arg(format!("unknown psf kind {other:?}"))),
        };
        if parts.len() != arity {
            return Err(Error::arg(format!("psf spec {s:?} has {} fields, expected {arity}", parts.len())));
        }
        Ok(PsfSpec { kind, size })
    }
}

/// The three 13×13 stand-in kernels, labelled `#1`–`#3`.
pub fn stand_in_psfs() -> [(&'static str, PsfSpec); 3] {
    [
        (
            "#1",
            PsfSpec {
                kind: PsfKind::Gaussian { std: 2.0 },
                size: 13,
            },
        ),
        (
            "#2",
            PsfSpec {
                kind: PsfKind::Motion {
                    length: 9.0,
                    angle: 45.0,
                },
                size: 13,
            },
        ),
        (
            "#3",
            PsfSpec {
                kind: PsfKind::Disk { radius: 4.0 },
                size: 13,
            },
        ),
    ]
}

fn coverage(size: usize, inside: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    let c = (size / 2) as f64;
    let s = COVERAGE_SAMPLES;
    let mut taps = Vec::with_capacity(size * size);
    for r in 0..size {
        for col in 0..size {
            let mut hits = 0usize;
            for i in 0..s {
                for j in 0..s {
                    let x = col as f64 - c - 0.5 + (j as f64 + 0.5) / s as f64;
                    // rows grow downward, y grows upward
                    let y = c - r as f64 + 0.5 - (i as f64 + 0.5) / s as f64;
                    if inside(x, y) {
                        hits += 1;
                    }
                }
            }
            taps.push(hits as f64 / (s * s) as f64);
        }
    }
    taps
}

/// Synthesizes a normalized `size × size` kernel.
pub fn make_psf(kind: PsfKind, size: usize) -> Result<Psf> {
    if size % 2 == 0 {
        return Err(Error::arg(format!("psf size must be odd, got {size}")));
    }
    let c = (size / 2) as f64;
    let taps = match kind {
        PsfKind::Delta => return Psf::delta(size),
        PsfKind::Gaussian { std } => {
            if !(std > 0.0 && std.is_finite()) {
                return Err(Error::arg(format!("gaussian std must be positive, got {std}")));
            }
            (0..size * size)
                .map(|i| {
                    let (y, x) = ((i / size) as f64 - c, (i % size) as f64 - c);
                    (-(x * x + y * y) / (2.0 * std * std)).exp()
                })
                .collect()
        }
        PsfKind::Motion { length, angle } => {
            if !(length >= 1.0 && length.is_finite() && angle.is_finite()) {
                return Err(Error::arg(format!("motion length must be at least 1, got {length}")));
            }
            let (sin, cos) = angle.to_radians().sin_cos();
            let half = 0.5 * length;
            coverage(size, |x, y| {
                let along = x * cos + y * sin;
                let across = -x * sin + y * cos;
                along.abs() <= half && across.abs() < 0.5
            })
        }
        PsfKind::Disk { radius } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::arg(format!("disk radius must be positive, got {radius}")));
            }
            coverage(size, |x, y| x * x + y * y <= radius * radius)
        }
    };
    Psf::new(size, taps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation as a percentage of the 255 gray-level range.
    pub level_percent: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            level_percent: 0.0,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    /// Standard deviation in gray levels.
    pub fn sigma(&self) -> f64 {
        self.level_percent / 100.0 * 255.0
    }
}

/// `g = Hf + ε`, `ε ~ N(0, σ²)` i.i.d. from a generator seeded with `noise.seed`.
/// The result is not clamped.
pub fn degrade(f: &Image, psf: &Psf, noise: &NoiseSpec) -> Result<Image> {
    if !(noise.level_percent >= 0.0 && noise.level_percent.is_finite()) {
        return Err(Error::arg(format!(
            "noise level must be non-negative, got {}",
            noise.level_percent
        )));
    }
    let blurred = convolve_periodic(f, psf)?;
    if noise.level_percent == 0.0 {
        return Ok(blurred);
    }
    let normal = Normal::new(0.0, noise.sigma()).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(noise.seed);
    let data = blurred
        .data()
        .iter()
        .map(|&x| x + normal.sample(&mut rng))
        .collect();
    Image::new(f.width(), f.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn narrow_gaussian_is_nearly_delta() {
        let p = make_psf(PsfKind::Gaussian { std: 0.05 }, 13).unwrap();
        assert!(p.tap(6, 6) >= 0.999);
    }

    #[test]
    fn all_kinds_have_unit_mass() {
        for (_, spec) in stand_in_psfs() {
            let p = spec.build().unwrap();
            assert!((p.taps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.taps().iter().all(|&t| t >= 0.0));
        }
    }

    #[test]
    fn horizontal_motion_stays_on_centre_row() {
        let p = make_psf(PsfKind::Motion { length: 5.0, angle: 0.0 }, 13).unwrap();
        for r in 0..13 {
            for c in 0..13 {
                let nonzero = p.tap(r, c) > 0.0;
                let expected = r == 6 && (4..=8).contains(&c);
                assert_eq!(nonzero, expected, "tap ({r},{c})");
            }
        }
    }

    #[test]
    fn symmetric_kinds_are_symmetric() {
        for kind in [PsfKind::Gaussian { std: 2.0 }, PsfKind::Disk { radius: 4.0 }] {
            let p = make_psf(kind, 13).unwrap();
            for r in 0..13 {
                for c in 0..13 {
                    let t = p.tap(r, c);
                    assert!((t - p.tap(c, r)).abs() < 1e-15);
                    assert!((t - p.tap(12 - r, c)).abs() < 1e-15);
                    assert!((t - p.tap(r, 12 - c)).abs() < 1e-15);
                }
            }
        }
        // a motion kernel is at least point-symmetric
        let m = make_psf(PsfKind::Motion { length: 9.0, angle: 45.0 }, 13).unwrap();
        for r in 0..13 {
            for c in 0..13 {
                assert!((m.tap(r, c) - m.tap(12 - r, 12 - c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_parameters_rejected() {
        assert!(make_psf(PsfKind::Gaussian { std: 0.0 }, 13).is_err());
        assert!(make_psf(PsfKind::Disk { radius: 0.0 }, 13).is_err());
        assert!(make_psf(PsfKind::Motion { length: 0.5, angle: 0.0 }, 13).is_err());
        assert!(make_psf(PsfKind::Delta, 4).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for (_, spec) in stand_in_psfs() {
            assert_eq!(spec.to_string().parse::<PsfSpec>().unwrap(), spec);
        }
        assert_eq!("delta:3".parse::<PsfSpec>().unwrap().kind, PsfKind::Delta);
        assert!("disk:13".parse::<PsfSpec>().is_err());
        assert!("box:13:1".parse::<PsfSpec>().is_err());
        assert!("gaussian:13:2:9".parse::<PsfSpec>().is_err());
    }

    #[test]
    fn identity_without_noise() {
        let f = crate::synth::shapes(20, 20);
        let g = degrade(&f, &Psf::delta(3).unwrap(), &NoiseSpec::default()).unwrap();
        for (a, b) in f.data().iter().zip(g.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn noise_std_matches_level() {
        let f = Image::filled(256, 256, 128.0);
        let noise = NoiseSpec { level_percent: 2.0, seed: 42 };
        let g = degrade(&f, &Psf::delta(1).unwrap(), &noise).unwrap();
        let mean = g.mean();
        let var = g.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (g.len() - 1) as f64;
        assert!((var.sqrt() - 5.1).abs() <= 0.03 * 5.1, "std {}", var.sqrt());
        // mean moves by O(σ/√(mn)) = 0.02 gray levels
        assert!((mean - 128.0).abs() < 5.0 * 5.1 / 256.0);
        // not clamped
        let h = degrade(&Image::zeros(32, 32), &Psf::delta(1).unwrap(), &noise).unwrap();
        assert!(h.min() < 0.0);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let f = crate::synth::texture(32, 32);
        let psf = stand_in_psfs()[0].1.build().unwrap();
        let n = NoiseSpec { level_percent: 5.0, seed: 7 };
        assert_eq!(degrade(&f, &psf, &n).unwrap(), degrade(&f, &psf, &n).unwrap());
        let other = NoiseSpec { seed: 8, ..n };
        assert_ne!(degrade(&f, &psf, &n).unwrap(), degrade(&f, &psf, &other).unwrap());
    }
}
