//! 2-D DFT machinery and transfer functions of periodic kernels.
//!
//! Forward transforms are unnormalized; inverse transforms scale by `1/(mn)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::Image;

/// Planned forward/inverse 2-D transforms for one grid size.
pub struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn run(&self, buf: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        assert_eq!(buf.len(), w * h, "buffer does not match the planned grid");
        row.process(buf);
        let mut column = vec![Complex64::default(); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = buf[r * w + c];
            }
            col.process(&mut column);
            for r in 0..h {
                buf[r * w + c] = column[r];
            }
        }
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform including the `1/(mn)` scale.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.width * self.height) as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    pub fn forward(&self, img: &Image) -> Spectrum {
        assert_eq!(img.dims(), (self.width, self.height));
        let mut buf: Vec<Complex64> = img.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut buf);
        Spectrum {
            width: self.width,
            height: self.height,
            values: buf,
        }
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, spec: &Spectrum) -> Image {
        assert_eq!(spec.dims(), (self.width, self.height));
        let mut buf = spec.values.clone();
        self.inverse_in_place(&mut buf);
        Image::new(self.width, self.height, buf.iter().map(|z| z.re).collect())
            .expect("planned grid is non-empty")
    }
}

/// Complex values on the DFT grid of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_values(width: usize, height: usize, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    /// `|value|²` at every frequency.
    pub fn power(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn conj(&self) -> Spectrum {
        Spectrum {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn mul(&self, other: &Spectrum) -> Spectrum {
        assert_eq!(self.dims(), other.dims());
        Spectrum {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Fails with the first frequency index holding a NaN or infinity.
    pub fn ensure_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            None => Ok(()),
            Some(i) => Err(Error::NonFiniteSpectrum {
                row: i / self.width,
                col: i % self.width,
            }),
        }
    }
}

/// Transfer function of a convolution kernel given as `(row_offset, col_offset, tap)`
/// triples: taps are wrapped onto the grid so that offset `(0,0)` lands on index `(0,0)`,
/// then forward-transformed.
pub(crate) fn kernel_spectrum(
    taps: impl IntoIterator<Item = (isize, isize, f64)>,
    width: usize,
    height: usize,
) -> Spectrum {
    let mut buf = vec![Complex64::default(); width * height];
    for (dr, dc, t) in taps {
        let r = dr.rem_euclid(height as isize) as usize;
        let c = dc.rem_euclid(width as isize) as usize;
        buf[r * width + c].re += t;
    }
    Fft2d::new(width, height).forward_in_place(&mut buf);
    Spectrum {
        width,
        height,
        values: buf,
    }
}

/// A small periodic linear stencil in correlation form:
/// `(A f)(p) = Σ coeff · f(p + offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    taps: Vec<(isize, isize, f64)>,
}

impl Stencil {
    /// Taps as `(row_offset, col_offset, coefficient)`.
    pub fn new(taps: Vec<(isize, isize, f64)>) -> Self {
        Self { taps }
    }

    pub fn taps(&self) -> &[(isize, isize, f64)] {
        &self.taps
    }

    pub fn forward_x() -> Self {
        Self::new(vec![(0, 0, -1.0), (0, 1, 1.0)])
    }

    pub fn forward_y() -> Self {
        Self::new(vec![(0, 0, -1.0), (1, 0, 1.0)])
    }

    pub fn second_xx() -> Self {
        Self::new(vec![(0, -1, 1.0), (0, 0, -2.0), (0, 1, 1.0)])
    }

    pub fn second_yy() -> Self {
        Self::new(vec![(-1, 0, 1.0), (0, 0, -2.0), (1, 0, 1.0)])
    }

    pub fn mixed() -> Self {
        Self::new(vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)])
    }

    /// The stencil of the adjoint operator (offsets reflected).
    pub fn adjoint(&self) -> Self {
        Self::new(self.taps.iter().map(|&(r, c, t)| (-r, -c, t)).collect())
    }

    /// Applies the stencil directly in the spatial domain.
    pub fn apply(&self, f: &Image) -> Image {
        Image::from_fn(f.width(), f.height(), |r, c| {
            self.taps
                .iter()
                .map(|&(dr, dc, t)| t * f.get_wrapped(r as isize + dr, c as isize + dc))
                .sum()
        })
    }
}

/// Transfer function of a periodic stencil. Correlation offset `o` is the
/// convolution tap at `-o`, embedded exactly like a PSF.
pub fn operator_spectrum(stencil: &Stencil, width: usize, height: usize) -> Spectrum {
    kernel_spectrum(
        stencil.taps.iter().map(|&(r, c, t)| (-r, -c, t)),
        width,
        height,
    )
}

/// `|F̂x|² + |F̂y|²`, the eigenvalues of `DᵀD`.
pub fn gradient_power(width: usize, height: usize) -> Vec<f64> {
    sum_powers(&[Stencil::forward_x(), Stencil::forward_y()], width, height)
}

/// `|D̂xx|² + |D̂xy|² + |D̂yx|² + |D̂yy|²`, the eigenvalues of `(D²)ᵀD²`.
pub fn hessian_power(width: usize, height: usize) -> Vec<f64> {
    sum_powers(
        &[
            Stencil::second_xx(),
            Stencil::mixed(),
            Stencil::mixed(),
            Stencil::second_yy(),
        ],
        width,
        height,
    )
}

fn sum_powers(stencils: &[Stencil], width: usize, height: usize) -> Vec<f64> {
    let mut acc = vec![0.0; width * height];
    for s in stencils {
        for (a, p) in acc
            .iter_mut()
            .zip(operator_spectrum(s, width, height).power())
        {
            *a += p;
        }
    }
    acc
}
