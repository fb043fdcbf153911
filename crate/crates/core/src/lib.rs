//! Non-blind image deblurring with a box-constrained hybrid of non-convex
//! first- and second-order total variation.
//!
//! The solver ([`solver::deblur`]) alternates closed-form ADMM subproblems
//! (two shrinkages, a box projection and an FFT linear solve) with an
//! iteratively reweighted convexification of the `|·|^ν` penalties and a
//! structure-adaptive blend `ζ` between the two regularizers.

pub mod degrade;
pub mod error;
pub mod image;
pub mod metrics;
pub mod operators;
pub mod pnm;
pub mod solver;
pub mod synth;
pub mod weights;

pub use error::{Error, Result};
pub use image::{clamp, ColorImage, Image};
pub use operators::Psf;
