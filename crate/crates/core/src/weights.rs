//! Adaptive regularizer weights.
//!
//! `ζ` blends the first-order term (edges and texture, `ζ → 1`) with the
//! second-order term (homogeneous areas, `ζ → 0`). It is built from the
//! eigenvalue spread of a Gaussian-smoothed Hessian and the min-max
//! normalized local variance. `ψ₁`, `ψ₂` are the reweighting factors that
//! majorize `|·|^ν` by a weighted `|·|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::operators::{grad, hessian};

/// How the reweighting factors are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IrlsMode {
    /// `ψ(x,y) = (|D f|(x,y) + eps)^(ν-1)` at every pixel.
    #[default]
    PerPixel,
    /// One scalar `(‖D f‖₁ + eps)^(ν-1)` broadcast to every pixel.
    Global,
}

/// Source of the first/second-order blend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum ZetaMode {
    /// Recomputed from the current iterate.
    #[default]
    Adaptive,
    /// Held at a constant in `[0, 1]`.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    /// Contrast constant applied to the eigenvalue spread.
    pub kappa: f64,
    /// Standard deviation of the Hessian pre-smoothing, in pixels.
    pub sigma: f64,
    /// Side of the local-variance window (odd).
    pub window: usize,
    pub nu1: f64,
    pub nu2: f64,
    /// Floor inside the reweighting power, in gray levels.
    pub eps: f64,
    pub irls: IrlsMode,
    pub zeta: ZetaMode,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            sigma: 1.0,
            window: 5,
            nu1: 0.55,
            nu2: 0.55,
            eps: 1e-3,
            irls: IrlsMode::PerPixel,
            zeta: ZetaMode::Adaptive,
        }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::arg(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::arg(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::arg(format!(
                "variance window must be odd and at least 3, got {}",
                self.window
            )));
        }
        for (name, nu) in [("nu1", self.nu1), ("nu2", self.nu2)] {
            if !(nu > 0.0 && nu <= 1.0) {
                return Err(Error::arg(format!("{name} must lie in (0, 1], got {nu}")));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::arg(format!("eps must be positive, got {}", self.eps)));
        }
        if let ZetaMode::Fixed(z) = self.zeta {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::arg(format!("fixed zeta must lie in [0, 1], got {z}")));
            }
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian taps on `[-radius, radius]`, `radius = ceil(3σ)`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Periodic convolution with a truncated, normalized Gaussian (separable).
pub fn gaussian_smooth(f: &Image, sigma: f64) -> Image {
    assert!(sigma > 0.0, "gaussian sigma must be positive");
    let taps = gaussian_taps(sigma);
    let radius = (taps.len() / 2) as isize;
    let rows = Image::from_fn(f.width(), f.height(), |r, c| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * f.get_wrapped(r as isize, c as isize + k as isize - radius))
            .sum()
    });
    Image::from_fn(f.width(), f.height(), |r, c| {
        taps.iter()
            .enumerate()
            .map(|(k, t)| t * rows.get_wrapped(r as isize + k as isize - radius, c as isize))
            .sum()
    })
}

/// Eigenvalues `(λ₁ ≥ λ₂)` of the symmetrized Hessian of `G_σ * f` at every pixel.
pub fn hessian_eigenvalues(f: &Image, sigma: f64) -> (Image, Image) {
    let t = hessian(&gaussian_smooth(f, sigma));
    let (w, h) = f.dims();
    let mut l1 = Vec::with_capacity(w * h);
    let mut l2 = Vec::with_capacity(w * h);
    for i in 0..w * h {
        let a = t.dxx.data()[i];
        let d = t.dyy.data()[i];
        let b = 0.5 * (t.dxy.data()[i] + t.dyx.data()[i]);
        let mean = 0.5 * (a + d);
        let r = (0.5 * (a - d)).hypot(b);
        l1.push(mean + r);
        l2.push(mean - r);
    }
    (
        Image::new(w, h, l1).expect("same grid"),
        Image::new(w, h, l2).expect("same grid"),
    )
}

/// Mean squared deviation from the centre pixel over a periodic
/// `window × window` neighbourhood.
pub fn local_variance(f: &Image, window: usize) -> Result<Image> {
    if window < 3 || window % 2 == 0 || window > f.width().min(f.height()) {
        return Err(Error::arg(format!(
            "variance window {window} must be odd, at least 3 and fit a {}x{} image",
            f.width(),
            f.height()
        )));
    }
    let half = (window / 2) as isize;
    let norm = 1.0 / (window * window) as f64;
    Ok(Image::from_fn(f.width(), f.height(), |r, c| {
        let center = f.get(r, c);
        let mut acc = 0.0;
        for dr in -half..=half {
            for dc in -half..=half {
                let d = f.get_wrapped(r as isize + dr, c as isize + dc) - center;
                acc += d * d;
            }
        }
        acc * norm
    }))
}

/// The adaptive blend `ζ = 1 - 1 / (1 + κ (λ₁ - λ₂) ρ̂)`, `ρ̂` the min-max
/// normalized local variance (identically 0 when the variance is flat).
pub fn zeta(f: &Image, cfg: &WeightConfig) -> Result<Image> {
    if let ZetaMode::Fixed(z) = cfg.zeta {
        return Ok(Image::filled(f.width(), f.height(), z));
    }
    let (l1, l2) = hessian_eigenvalues(f, cfg.sigma);
    let var = local_variance(f, cfg.window)?;
    let (lo, hi) = (var.min(), var.max());
    let span = hi - lo;
    let (w, h) = f.dims();
    let data = (0..w * h)
        .map(|i| {
            let rho = if span > 0.0 {
                (var.data()[i] - lo) / span
            } else {
                0.0
            };
            let spread = (l1.data()[i] - l2.data()[i]).max(0.0);
            1.0 - 1.0 / (1.0 + cfg.kappa * spread * rho)
        })
        .collect();
    Image::new(w, h, data)
}

fn reweight(mag: &Image, nu: f64, eps: f64, mode: IrlsMode) -> Image {
    match mode {
        IrlsMode::PerPixel => mag.map(|m| (m + eps).powf(nu - 1.0)),
        IrlsMode::Global => {
            let s = (mag.sum() + eps).powf(nu - 1.0);
            Image::filled(mag.width(), mag.height(), s)
        }
    }
}

/// Reweighting factors `(ψ₁, ψ₂)` from isotropic gradient and Frobenius
/// Hessian magnitudes of `f`.
pub fn irls_weights(f: &Image, cfg: &WeightConfig) -> (Image, Image) {
    let psi1 = reweight(&grad(f).magnitude(), cfg.nu1, cfg.eps, cfg.irls);
    let psi2 = reweight(&hessian(f).magnitude(), cfg.nu2, cfg.eps, cfg.irls);
    (psi1, psi2)
}
