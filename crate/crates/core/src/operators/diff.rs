//! Periodic first- and second-order finite differences and their exact adjoints.
//!
//! First differences are forward. `dxx`/`dyy` are backward-after-forward
//! composites (the 3-point second difference), and the mixed entries are
//! forward-after-forward. Both mixed planes are evaluated with one symmetric
//! expression so that `dxy == dyx` holds bitwise.

use crate::image::Image;

use super::fields::{TensorField, VectorField};

#[inline]
fn next(i: usize, n: usize) -> usize {
    if i + 1 == n {
        0
    } else {
        i + 1
    }
}

#[inline]
fn prev(i: usize, n: usize) -> usize {
    if i == 0 {
        n - 1
    } else {
        i - 1
    }
}

fn build(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> f64) -> Image {
    Image::from_fn(w, h, |r, c| f(r, c))
}

/// Forward differences with wrap: `dx(i,j) = f(i,j+1) - f(i,j)`, `dy(i,j) = f(i+1,j) - f(i,j)`.
pub fn grad(f: &Image) -> VectorField {
    let (w, h) = f.dims();
    let d = f.data();
    let dx = build(w, h, |r, c| d[r * w + next(c, w)] - d[r * w + c]);
    let dy = build(w, h, |r, c| d[next(r, h) * w + c] - d[r * w + c]);
    VectorField::new(dx, dy)
}

/// Adjoint of [`grad`]: negated backward-difference divergence.
pub fn grad_adjoint(v: &VectorField) -> Image {
    let (w, h) = v.dims();
    let (x, y) = (v.dx.data(), v.dy.data());
    build(w, h, |r, c| {
        let i = r * w + c;
        (x[r * w + prev(c, w)] - x[i]) + (y[prev(r, h) * w + c] - y[i])
    })
}

/// Second differences `(dxx, dxy, dyx, dyy)`.
pub fn hessian(f: &Image) -> TensorField {
    let (w, h) = f.dims();
    let d = f.data();
    let dxx = build(w, h, |r, c| {
        d[r * w + next(c, w)] - 2.0 * d[r * w + c] + d[r * w + prev(c, w)]
    });
    let dyy = build(w, h, |r, c| {
        d[next(r, h) * w + c] - 2.0 * d[r * w + c] + d[prev(r, h) * w + c]
    });
    let dxy = build(w, h, |r, c| {
        let (rn, cn) = (next(r, h), next(c, w));
        (d[rn * w + cn] + d[r * w + c]) - (d[rn * w + c] + d[r * w + cn])
    });
    TensorField::new(dxx, dxy.clone(), dxy, dyy)
}

/// Adjoint of [`hessian`].
///
/// The pure second differences are self-adjoint; the mixed ones turn into
/// backward-after-backward differences.
pub fn hessian_adjoint(t: &TensorField) -> Image {
    let (w, h) = t.dims();
    let (xx, yy) = (t.dxx.data(), t.dyy.data());
    // Both mixed planes share the same adjoint stencil, so fold them first.
    let m = t.dxy.zip_map(&t.dyx, |a, b| a + b);
    let m = m.data();
    build(w, h, |r, c| {
        let (rp, cp) = (prev(r, h), prev(c, w));
        let i = r * w + c;
        let sxx = xx[r * w + next(c, w)] - 2.0 * xx[i] + xx[r * w + cp];
        let syy = yy[next(r, h) * w + c] - 2.0 * yy[i] + yy[rp * w + c];
        let sxy = (m[rp * w + cp] + m[i]) - (m[rp * w + c] + m[r * w + cp]);
        sxx + sxy + syy
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |_, _| rng.random_range(-100.0..100.0))
    }

    #[test]
    fn constants_are_annihilated() {
        let f = Image::filled(7, 5, 42.0);
        let g = grad(&f);
        assert!(g.dx.data().iter().chain(g.dy.data()).all(|&x| x == 0.0));
        let t = hessian(&f);
        assert!(t.planes().iter().all(|p| p.data().iter().all(|&x| x == 0.0)));
        let back = grad_adjoint(&g);
        assert!(back.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ramp_forward_difference_wraps() {
        let n = 6;
        let f = Image::from_fn(n, 3, |_, c| c as f64);
        let g = grad(&f);
        for r in 0..3 {
            for c in 0..n - 1 {
                assert_eq!(g.dx.get(r, c), 1.0);
            }
            assert_eq!(g.dx.get(r, n - 1), 1.0 - n as f64);
        }
        assert!(g.dy.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn periodic_differences_telescope() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Image::from_fn(8, 8, |_, _| rng.random_range(0..256) as f64);
        let g = grad(&f);
        assert_eq!(g.dx.sum(), 0.0);
        assert_eq!(g.dy.sum(), 0.0);
    }

    #[test]
    fn zero_fields_map_to_zero() {
        assert!(grad_adjoint(&VectorField::zeros(4, 5))
            .data()
            .iter()
            .all(|&x| x == 0.0));
        assert!(hessian_adjoint(&TensorField::zeros(4, 5))
            .data()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn affine_interior_second_differences_vanish() {
        let f = Image::from_fn(9, 8, |r, c| 3.0 * r as f64 - 2.0 * c as f64);
        let t = hessian(&f);
        for r in 1..7 {
            for c in 1..8 {
                for p in t.planes() {
                    assert_eq!(p.get(r, c), 0.0, "at ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn mixed_planes_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_image(&mut rng, 11, 7);
        let t = hessian(&f);
        assert_eq!(t.dxy, t.dyx);
    }

    #[test]
    fn mixed_plane_matches_both_compositions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_image(&mut rng, 6, 5);
        let t = hessian(&f);
        let fx_then_fy = grad(&grad(&f).dx).dy;
        let fy_then_fx = grad(&grad(&f).dy).dx;
        for i in 0..f.len() {
            assert!((t.dxy.data()[i] - fx_then_fy.data()[i]).abs() < 1e-12);
            assert!((t.dyx.data()[i] - fy_then_fx.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_identities_on_16x16() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_image(&mut rng, 16, 16);
        let v = VectorField::new(random_image(&mut rng, 16, 16), random_image(&mut rng, 16, 16));
        let lhs = grad(&f).dot(&v);
        let rhs = f.dot(&grad_adjoint(&v));
        assert!((lhs - rhs).abs() <= 1e-10 * (grad(&f).norm() * v.norm()));

        let t = TensorField::new(
            random_image(&mut rng, 16, 16),
            random_image(&mut rng, 16, 16),
            random_image(&mut rng, 16, 16),
            random_image(&mut rng, 16, 16),
        );
        let lhs = hessian(&f).dot(&t);
        let rhs = f.dot(&hessian_adjoint(&t));
        assert!((lhs - rhs).abs() <= 1e-10 * (hessian(&f).norm() * t.norm()));
    }
}
