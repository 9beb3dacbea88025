//! Adaptive Simpson quadrature over real and complex integrands.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

/// Values an adaptive rule can integrate: a vector space over the reals
/// with a norm for the error estimate.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(&self) -> f64;
    fn zero() -> Self;
}

impl Integrand for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn zero() -> Self {
        0.0
    }
}

impl Integrand for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

/// Subdivision levels applied unconditionally before the error test, so
/// narrow features are not skipped by the first coarse panel.
const MIN_DEPTH: u32 = 5;
const MAX_DEPTH: u32 = 50;
/// Past this depth a panel is also accepted once its error estimate is below
/// `FLOOR_FRACTION` of the requested tolerance; integrable endpoint
/// singularities otherwise exhaust the halving tolerance.
const FLOOR_DEPTH: u32 = 30;
const FLOOR_FRACTION: f64 = 1e-3;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Fails with [`Error::Quadrature`] naming the offending panel when the
/// recursion limit is hit before the local error estimate drops below its
/// share of the tolerance.
pub fn adaptive_simpson<T, F>(f: F, a: f64, b: f64, tol: f64) -> Result<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("quadrature bounds must be finite"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok(T::zero());
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, tol * FLOOR_FRACTION, 0)
}

/// Sums [`adaptive_simpson`] over consecutive panels `[p_i, p_{i+1}]`, each
/// with its own absolute tolerance `tol`.
pub fn integrate_panels<T, F>(f: F, breakpoints: &[f64], tol: f64) -> Result<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    let mut total = T::zero();
    for w in breakpoints.windows(2) {
        total = total + adaptive_simpson(&f, w[0], w[1], tol)?;
    }
    Ok(total)
}

fn simpson<T: Integrand>(a: f64, b: f64, fa: T, fm: T, fb: T) -> T {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn recurse<T, F>(
    f: &F,
    a: f64,
    b: f64,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: f64,
    floor: f64,
    depth: u32,
) -> Result<T>
where
    T: Integrand,
    F: Fn(f64) -> T,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let refined = left + right;
    let delta = refined - whole;
    let err = delta.magnitude();
    if depth >= MIN_DEPTH && (err <= 15.0 * tol || (depth >= FLOOR_DEPTH && err <= 15.0 * floor)) {
        return Ok(refined + delta * (1.0 / 15.0));
    }
    if depth >= MAX_DEPTH || m <= a || m >= b {
        return Err(Error::Quadrature { a, b, error: err / 15.0 });
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, floor, depth + 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, floor, depth + 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v: f64 = adaptive_simpson(|x| x * x * x - 2.0 * x, -1.0, 3.0, 1e-12).unwrap();
        // x^4/4 - x^2 from -1 to 3
        assert!((v - (81.0 / 4.0 - 9.0 - (0.25 - 1.0))).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        // \int_0^\pi e^{ix} dx = 2i
        let v: Complex64 =
            adaptive_simpson(|x| Complex64::new(0.0, x).exp(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-11);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let v: f64 = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_names_panel() {
        let err = adaptive_simpson(|x: f64| if x > 0.3 { 1.0 / (x - 0.3) } else { 0.0 }, 0.0, 1.0, 1e-14)
            .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn empty_interval() {
        let v: f64 = adaptive_simpson(|x| x, 2.0, 2.0, 1e-8).unwrap();
        assert_eq!(v, 0.0);
    }
}
