//! The standard semicircle law on `[-2, 2]`.

use std::f64::consts::{FRAC_PI_8, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default for the region-scale constant `A0` (`v0 = A0 / n`).
pub const DEFAULT_A0: f64 = 1.0;

/// A point `u + iv` of the open upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    u: f64,
    v: f64,
}

impl UpperHalfPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::invalid(format!("non-finite point {u} + {v}i")));
        }
        if v <= 0.0 {
            return Err(Error::invalid(format!("imaginary part must be positive, got {v}")));
        }
        Ok(Self { u, v })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    /// Distance of the abscissa to the nearer spectral edge, `|2 - |u||`.
    pub fn edge_gap(&self) -> f64 {
        (2.0 - self.u.abs()).abs()
    }
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(format!("non-finite input {x}")))
    }
}

/// Semicircle density `sqrt(4 - x^2) / (2 pi)` on `[-2, 2]`, zero outside.
pub fn density(x: f64) -> Result<f64> {
    Ok(density_unchecked(finite(x)?))
}

pub(crate) fn density_unchecked(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Semicircle distribution function, clamped to `[0, 1]`.
pub fn cdf(x: f64) -> Result<f64> {
    Ok(cdf_unchecked(finite(x)?))
}

pub(crate) fn cdf_unchecked(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    let g = 0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (0.5 * x).asin() / PI;
    g.clamp(0.0, 1.0)
}

/// Inverse of [`cdf`]: returns `gamma` in `[-2, 2]` with `|G(gamma) - p| <= 1e-12`.
///
/// `quantile(j / n)` is the classical location of the `j`-th eigenvalue.
pub fn quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(-2.0);
    }
    if p == 1.0 {
        return Ok(2.0);
    }
    let (mut lo, mut hi) = (-2.0_f64, 2.0_f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if cdf_unchecked(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    // one Newton step, kept only if it stays inside the bracket and helps
    let g = density_unchecked(x);
    if g > 0.0 {
        let step = x - (cdf_unchecked(x) - p) / g;
        if (lo..=hi).contains(&step) && (cdf_unchecked(step) - p).abs() <= (cdf_unchecked(x) - p).abs() {
            x = step;
        }
    }
    Ok(x)
}

/// Square root with nonnegative imaginary part.
pub fn sqrt_upper(w: Complex64) -> Complex64 {
    let r = w.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// Stieltjes transform `s(z) = (-z + sqrt(z^2 - 4)) / 2` of the semicircle law.
pub fn stieltjes(z: UpperHalfPoint) -> Complex64 {
    stieltjes_at(z.z())
}

/// `s(z)` together with `s'(z) = -s(z) / sqrt(z^2 - 4)`.
pub fn stieltjes_with_derivative(z: UpperHalfPoint) -> (Complex64, Complex64) {
    let z = z.z();
    let q = sqrt_upper(z * z - 4.0);
    let s = root_from_sqrt(z, q);
    (s, -s / q)
}

/// [`stieltjes`] for a raw complex argument; `z.im > 0` is assumed.
pub fn stieltjes_at(z: Complex64) -> Complex64 {
    root_from_sqrt(z, sqrt_upper(z * z - 4.0))
}

fn root_from_sqrt(z: Complex64, q: Complex64) -> Complex64 {
    // s and -z - s multiply to 1; pick the form without cancellation
    let minus = q - z;
    let plus = q + z;
    if minus.norm() >= plus.norm() {
        0.5 * minus
    } else {
        -2.0 / plus
    }
}

/// Parameters of the contour smoothing inequality at dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    /// `a` with `(1/pi) \int_{|u|<=a} du / (1 + u^2) = 3/4`, i.e. `tan(3 pi / 8)`.
    pub a: f64,
    /// `v0 = A0 / n`.
    pub v0: f64,
    /// Interval trim, `epsilon^{3/2} = 2 v0 a`.
    pub epsilon: f64,
    pub a0: f64,
}

pub fn smoothing_constant() -> f64 {
    (3.0 * FRAC_PI_8).tan()
}

pub fn smoothing_params(n: usize, a0: f64) -> Result<SmoothingParams> {
    if n == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(a0 > 0.0 && a0.is_finite()) {
        return Err(Error::invalid(format!("A0 must be positive, got {a0}")));
    }
    let a = smoothing_constant();
    let v0 = a0 / n as f64;
    let epsilon = (2.0 * a * v0).powf(2.0 / 3.0);
    Ok(SmoothingParams { a, v0, epsilon, a0 })
}

impl SmoothingParams {
    /// Whether the trim lies in `(0, 1/2)`, the range the bound is stated for.
    pub fn is_admissible(&self) -> bool {
        self.epsilon > 0.0 && self.epsilon < 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn density_values() {
        assert!(close(density(0.0).unwrap(), 1.0 / PI, 1e-15));
        assert!(close(density(0.0).unwrap(), 0.3183099, 1e-7));
        assert_eq!(density(2.0).unwrap(), 0.0);
        assert_eq!(density(-3.5).unwrap(), 0.0);
        assert!(close(density(1.0).unwrap(), 3f64.sqrt() / (2.0 * PI), 1e-15));
        assert!(close(density(1.0).unwrap(), 0.2756644, 1e-7));
        assert!(density(f64::NAN).is_err());
        assert!(density(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_values() {
        assert_eq!(cdf(-2.0).unwrap(), 0.0);
        assert_eq!(cdf(2.0).unwrap(), 1.0);
        assert!(close(cdf(0.0).unwrap(), 0.5, 1e-16));
        assert!(close(cdf(1.0).unwrap(), 0.8044989, 1e-7));
        assert!(cdf(f64::NAN).is_err());
    }

    #[test]
    fn cdf_matches_quadrature_of_density() {
        for &x in &[-1.7, -0.3, 0.0, 1.0, 1.9] {
            let q: f64 = adaptive_simpson(density_unchecked, -2.0, x, 1e-13).unwrap();
            assert!(close(q, cdf(x).unwrap(), 1e-10), "x = {x}: {q} vs {}", cdf(x).unwrap());
        }
    }

    #[test]
    fn quantile_values() {
        assert!(close(quantile(0.5).unwrap(), 0.0, 1e-13));
        assert_eq!(quantile(1.0).unwrap(), 2.0);
        assert_eq!(quantile(0.0).unwrap(), -2.0);
        assert!(close(quantile(cdf(1.0).unwrap()).unwrap(), 1.0, 1e-9));
        // seven-digit probability: the inverse is only that accurate
        assert!(close(quantile(0.8044989).unwrap(), 1.0, 1e-7));
        assert!(quantile(-0.1).is_err());
        assert!(quantile(1.5).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_to_1e12() {
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            let g = quantile(p).unwrap();
            assert!((cdf(g).unwrap() - p).abs() <= 1e-12, "p = {p}");
        }
    }

    #[test]
    fn stieltjes_values() {
        let s = stieltjes(UpperHalfPoint::new(0.0, 1.0).unwrap());
        assert!(close(s.re, 0.0, 1e-15));
        assert!(close(s.im, (5f64.sqrt() - 1.0) / 2.0, 1e-15));
        assert!(close(s.im, 0.6180340, 1e-7));

        let s = stieltjes(UpperHalfPoint::new(0.0, 2.0).unwrap());
        assert!(close(s.im, 2f64.sqrt() - 1.0, 1e-15));
        assert!(close(s.im, 0.4142136, 1e-7));

        let z = UpperHalfPoint::new(1.0, 1.0).unwrap();
        let s = stieltjes(z);
        assert!((s * s + z.z() * s + 1.0).norm() <= 1e-12);

        let (_, ds) = stieltjes_with_derivative(UpperHalfPoint::new(0.0, 1.0).unwrap());
        // -s/sqrt(z^2-4) = -(sqrt5-1)/(2 sqrt5)
        let expect = -(5f64.sqrt() - 1.0) / (2.0 * 5f64.sqrt());
        assert!(close(ds.re, expect, 1e-15) && close(ds.im, 0.0, 1e-15));
        assert!(close(ds.re, -0.2763932, 1e-7));
    }

    #[test]
    fn stieltjes_derivative_matches_finite_difference() {
        for &(u, v) in &[(0.3, 0.2), (-2.5, 0.05), (1.9, 1.0)] {
            let z = UpperHalfPoint::new(u, v).unwrap();
            let (_, ds) = stieltjes_with_derivative(z);
            let h = 1e-6;
            let fd = (stieltjes_at(z.z() + h) - stieltjes_at(z.z() - h)) / (2.0 * h);
            assert!((fd - ds).norm() < 1e-6 * (1.0 + ds.norm()));
        }
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(UpperHalfPoint::new(0.0, 0.0).is_err());
        assert!(UpperHalfPoint::new(0.0, -1.0).is_err());
    }

    #[test]
    fn smoothing_parameter_values() {
        let p = smoothing_params(1000, 1.0).unwrap();
        assert!(close(p.a, 1.0 + 2f64.sqrt(), 1e-12));
        assert!(close(p.a, 2.4142136, 1e-7));
        assert!(close(2.0 / PI * p.a.atan(), 0.75, 1e-15));
        assert!(close(p.v0, 0.001, 1e-18));
        assert!(close(p.epsilon, 0.0285674, 1e-7));
        assert!(close(p.epsilon.powf(1.5), 2.0 * p.v0 * p.a, 1e-12));
        assert!(p.is_admissible());
        assert!(smoothing_params(0, 1.0).is_err());
        assert!(smoothing_params(10, 0.0).is_err());
        assert!(!smoothing_params(5, 1.0).unwrap().is_admissible());
    }
}
