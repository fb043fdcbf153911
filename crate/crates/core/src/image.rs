//! Single-channel pixel grids and their colour bundles.
//!
//! Every per-pixel scalar the toolkit manipulates (observations, estimates,
//! multipliers, weight maps) is an [`Image`]. Values are gray levels with a
//! nominal range of `[0, 255]`; solver intermediates may leave that range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest extent per axis for which second-order periodic stencils are
/// well defined.
pub const MIN_SOLVER_EXTENT: usize = 3;

/// Row-major real-valued pixel grid with a top-left origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::arg(format!(
                "image data has {} samples, expected {}x{} = {}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Periodic access: indices wrap around both axes.
    #[inline]
    pub fn get_wrapped(&self, row: isize, col: isize) -> f64 {
        let r = row.rem_euclid(self.height as isize) as usize;
        let c = col.rem_euclid(self.width as isize) as usize;
        self.data[r * self.width + c]
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.dims() == other.dims()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Pixelwise combination of two equally sized images.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        assert!(self.same_dims(other), "image dimension mismatch");
        Image {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn dot(&self, other: &Image) -> f64 {
        assert!(self.same_dims(other), "image dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Fails if any pixel is NaN or infinite.
    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::arg(format!(
                "{what} has a non-finite value at row {}, col {}",
                i / self.width,
                i % self.width
            ))),
        }
    }

    /// Fails unless both axes reach [`MIN_SOLVER_EXTENT`].
    pub fn ensure_solver_extent(&self) -> Result<()> {
        if self.width < MIN_SOLVER_EXTENT || self.height < MIN_SOLVER_EXTENT {
            return Err(Error::arg(format!(
                "image must be at least {MIN_SOLVER_EXTENT}x{MIN_SOLVER_EXTENT}, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Periodic translation: output(r, c) = self(r - dr, c - dc).
    pub fn shifted(&self, dr: isize, dc: isize) -> Image {
        Image::from_fn(self.width, self.height, |r, c| {
            self.get_wrapped(r as isize - dr, c as isize - dc)
        })
    }

    /// Linear rescale of the value range onto `[0, 255]`; constant images map to 0.
    pub fn rescaled_to_display(&self) -> Image {
        let (lo, hi) = (self.min(), self.max());
        if hi > lo {
            self.map(|x| 255.0 * (x - lo) / (hi - lo))
        } else {
            Image::zeros(self.width, self.height)
        }
    }
}

/// Projection onto the box `[lo, hi]`.
pub fn clamp(img: &Image, lo: f64, hi: f64) -> Result<Image> {
    if !(lo <= hi) {
        return Err(Error::arg(format!("clamp bounds reversed: [{lo}, {hi}]")));
    }
    Ok(img.map(|p| p.max(lo).min(hi)))
}

/// One or three planes sharing the same dimensions, processed independently.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    planes: Vec<Image>,
}

impl ColorImage {
    pub fn new(planes: Vec<Image>) -> Result<Self> {
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::arg(format!(
                "a colour image has 1 or 3 planes, got {}",
                planes.len()
            )));
        }
        let dims = planes[0].dims();
        if planes.iter().any(|p| p.dims() != dims) {
            return Err(Error::arg("colour planes differ in size"));
        }
        Ok(Self { planes })
    }

    pub fn gray(plane: Image) -> Self {
        Self {
            planes: vec![plane],
        }
    }

    pub fn planes(&self) -> &[Image] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Image> {
        self.planes
    }

    pub fn num_planes(&self) -> usize {
        self.planes.len()
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Image::new(0, 5, vec![]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn clamp_cases() {
        let img = Image::new(3, 1, vec![300.0, -3.0, 17.5]).unwrap();
        let c = clamp(&img, 0.0, 255.0).unwrap();
        assert_eq!(c.data(), &[255.0, 0.0, 17.5]);
        assert_eq!(clamp(&c, 0.0, 255.0).unwrap(), c);
        assert!(clamp(&img, 1.0, 0.0).is_err());

        let inside = Image::new(2, 2, vec![0.0, 1.0, 254.0, 255.0]).unwrap();
        assert_eq!(clamp(&inside, 0.0, 255.0).unwrap(), inside);
    }

    #[test]
    fn shift_wraps() {
        let img = Image::from_fn(3, 3, |r, c| (r * 3 + c) as f64);
        let s = img.shifted(1, 1);
        assert_eq!(s.get(0, 0), img.get(2, 2));
        assert_eq!(s.get(1, 1), img.get(0, 0));
    }

    #[test]
    fn color_planes_must_agree() {
        let a = Image::zeros(3, 3);
        let b = Image::zeros(4, 3);
        assert!(ColorImage::new(vec![a.clone(), a.clone(), b]).is_err());
        assert!(ColorImage::new(vec![a.clone(), a.clone()]).is_err());
        assert_eq!(ColorImage::new(vec![a.clone()]).unwrap().num_planes(), 1);
    }

    #[test]
    fn finite_check_reports_position() {
        let img = Image::new(3, 3, {
            let mut v = vec![0.0; 9];
            v[5] = f64::NAN;
            v
        })
        .unwrap();
        let err = img.ensure_finite("g").unwrap_err().to_string();
        assert!(err.contains("row 1, col 2"), "{err}");
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn clamp_is_idempotent_projection(
            vals in proptest::collection::vec(-500.0f64..800.0, 9),
            lo in -10.0f64..100.0,
            span in 0.0f64..300.0,
        ) {
            let img = Image::new(3, 3, vals).unwrap();
            let hi = lo + span;
            let once = clamp(&img, lo, hi).unwrap();
            prop_assert!(once.data().iter().all(|&p| p >= lo && p <= hi));
            prop_assert_eq!(clamp(&once, lo, hi).unwrap(), once);
        }
    }
}
