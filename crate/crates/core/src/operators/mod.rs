//! Linear operators of the deblurring model, all under periodic boundaries.

mod diff;
mod fields;
mod psf;
mod spectral;

pub use diff::{grad, grad_adjoint, hessian, hessian_adjoint};
pub use fields::{TensorField, VectorField};
pub use psf::{convolve_periodic, convolve_periodic_adjoint, psf_to_spectrum, Psf};
pub use spectral::{
    gradient_power, hessian_power, operator_spectrum, Fft2d, Spectrum, Stencil,
};
