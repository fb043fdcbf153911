use serde::{Deserialize, Serialize};

use crate::image::Image;

/// Per-pixel 2-vector field (first differences and their multipliers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub dx: Image,
    pub dy: Image,
}

/// Per-pixel 4-component field `(xx, xy, yx, yy)` of second differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorField {
    pub dxx: Image,
    pub dxy: Image,
    pub dyx: Image,
    pub dyy: Image,
}

impl VectorField {
    pub fn new(dx: Image, dy: Image) -> Self {
        assert!(dx.same_dims(&dy), "vector field planes differ in size");
        Self { dx, dy }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(Image::zeros(width, height), Image::zeros(width, height))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dx.dims()
    }

    pub fn planes(&self) -> [&Image; 2] {
        [&self.dx, &self.dy]
    }

    pub fn map_planes(&self, f: impl Fn(&Image) -> Image) -> Self {
        Self::new(f(&self.dx), f(&self.dy))
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::new(self.dx.zip_map(&other.dx, &f), self.dy.zip_map(&other.dy, &f))
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.dx.dot(&other.dx) + self.dy.dot(&other.dy)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Isotropic per-pixel magnitude `sqrt(dx² + dy²)`.
    pub fn magnitude(&self) -> Image {
        self.dx.zip_map(&self.dy, f64::hypot)
    }

    pub fn is_finite(&self) -> bool {
        self.planes().iter().all(|p| p.is_finite())
    }
}

impl TensorField {
    pub fn new(dxx: Image, dxy: Image, dyx: Image, dyy: Image) -> Self {
        let d = dxx.dims();
        assert!(
            dxy.dims() == d && dyx.dims() == d && dyy.dims() == d,
            "tensor field planes differ in size"
        );
        Self { dxx, dxy, dyx, dyy }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        let z = Image::zeros(width, height);
        Self::new(z.clone(), z.clone(), z.clone(), z)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dxx.dims()
    }

    pub fn planes(&self) -> [&Image; 4] {
        [&self.dxx, &self.dxy, &self.dyx, &self.dyy]
    }

    pub fn map_planes(&self, f: impl Fn(&Image) -> Image) -> Self {
        Self::new(f(&self.dxx), f(&self.dxy), f(&self.dyx), f(&self.dyy))
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::new(
            self.dxx.zip_map(&other.dxx, &f),
            self.dxy.zip_map(&other.dxy, &f),
            self.dyx.zip_map(&other.dyx, &f),
            self.dyy.zip_map(&other.dyy, &f),
        )
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.planes()
            .iter()
            .zip(other.planes())
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Frobenius per-pixel magnitude over all four components.
    pub fn magnitude(&self) -> Image {
        let (w, h) = self.dims();
        let data = (0..w * h)
            .map(|i| {
                self.planes()
                    .iter()
                    .map(|p| p.data()[i] * p.data()[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Image::new(w, h, data).expect("dimensions already validated")
    }

    pub fn is_finite(&self) -> bool {
        self.planes().iter().all(|p| p.is_finite())
    }
}
