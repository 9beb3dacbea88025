//! The spectral window region, the Stieltjes error envelope, and a numeric
//! evaluator for the contour smoothing bound on the Kolmogorov distance.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quadrature::{adaptive_simpson, integrate_panels};
use crate::resolvent::StieltjesSample;
use crate::semicircle::{smoothing_params, stieltjes_at, SmoothingParams, UpperHalfPoint};
use crate::{Error, Result};

/// Per-segment absolute quadrature tolerance used by default.
pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-8;
/// Height of the upper horizontal contour segment used by default.
pub const DEFAULT_TOP_HEIGHT: f64 = 4.0;
/// Upper end of the v-range of the region grid.
pub const REGION_TOP: f64 = 4.0;
/// Horizontal integrals stop once the integrand falls below this at both ends.
pub const TAIL_CUTOFF: f64 = 1e-12;
/// Coarse grid size for the supremum over `x`.
pub const SUP_GRID_POINTS: usize = 257;
const GOLDEN_ITERATIONS: usize = 48;
const MAX_TAIL_EXTENT: f64 = 1e12;

/// `{u in [-2+eps, 2-eps], v >= v0 / sqrt(|2 - |u||)}` with a sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub n: usize,
    pub a0: f64,
    pub epsilon: f64,
    pub u_count: usize,
    pub v_count: usize,
}

impl RegionSpec {
    pub fn new(n: usize, a0: f64, epsilon: f64, u_count: usize, v_count: usize) -> Result<Self> {
        if n == 0 || !(a0 > 0.0 && a0.is_finite()) {
            return Err(Error::invalid(format!("region needs n >= 1 and A0 > 0, got n = {n}, A0 = {a0}")));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::invalid(format!("region trim must lie in (0, 1/2), got {epsilon}")));
        }
        if u_count == 0 || v_count == 0 {
            return Err(Error::invalid("region grid sizes must be positive"));
        }
        Ok(RegionSpec {
            n,
            a0,
            epsilon,
            u_count,
            v_count,
        })
    }

    /// Region with the trim tied to `n` and `A0` through the smoothing parameters.
    pub fn for_dimension(n: usize, a0: f64, u_count: usize, v_count: usize) -> Result<Self> {
        let p = smoothing_params(n, a0)?;
        Self::new(n, a0, p.epsilon, u_count, v_count)
    }

    pub fn v0(&self) -> f64 {
        self.a0 / self.n as f64
    }

    pub fn u_range(&self) -> (f64, f64) {
        (-2.0 + self.epsilon, 2.0 - self.epsilon)
    }

    /// Lower edge `v0 / sqrt(gamma(u))`.
    pub fn lower_v(&self, u: f64) -> f64 {
        self.v0() / (2.0 - u.abs()).abs().sqrt()
    }

    pub fn contains(&self, z: UpperHalfPoint) -> bool {
        let (lo, hi) = self.u_range();
        z.u() >= lo && z.u() <= hi && z.v() >= self.lower_v(z.u())
    }
}

/// Grid of the region: `u` linear over the trimmed interval, `v` log-spaced
/// from the lower edge up to [`REGION_TOP`].
pub fn region_grid(spec: &RegionSpec) -> Vec<UpperHalfPoint> {
    let (lo, hi) = spec.u_range();
    let us: Vec<f64> = match spec.u_count {
        1 => vec![0.0],
        m => (0..m)
            .map(|k| if k + 1 == m { hi } else { lo + (hi - lo) * k as f64 / (m - 1) as f64 })
            .collect(),
    };
    let mut grid = Vec::with_capacity(us.len() * spec.v_count);
    for u in us {
        let bottom = spec.lower_v(u);
        let top = REGION_TOP.max(bottom);
        let ratio = top / bottom;
        for k in 0..spec.v_count {
            let v = match k {
                0 => bottom,
                k if k + 1 == spec.v_count => top,
                k => (bottom * ratio.powf(k as f64 / (spec.v_count - 1) as f64)).clamp(bottom, top),
            };
            grid.push(UpperHalfPoint::new(u, v).expect("positive height"));
        }
    }
    grid
}

/// Both inequalities of the region lemma at one point, with their sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemGCheck {
    /// `|z^2 - 4|`.
    pub abs_z2_minus_4: f64,
    /// `2 max(gamma, v)`.
    pub two_max_gamma_v: f64,
    /// `n v sqrt|z^2 - 4|`.
    pub n_v_sqrt: f64,
    /// `2 A0`.
    pub two_a0: f64,
}

impl LemGCheck {
    pub fn abs_holds(&self) -> bool {
        self.abs_z2_minus_4 >= self.two_max_gamma_v
    }

    pub fn product_holds(&self) -> bool {
        self.n_v_sqrt >= self.two_a0
    }
}

pub fn lem_g(z: UpperHalfPoint, n: usize, a0: f64) -> LemGCheck {
    let zc = z.z();
    let abs = (zc * zc - 4.0).norm();
    let gamma = z.edge_gap();
    LemGCheck {
        abs_z2_minus_4: abs,
        two_max_gamma_v: 2.0 * gamma.max(z.v()),
        n_v_sqrt: n as f64 * z.v() * abs.sqrt(),
        two_a0: 2.0 * a0,
    }
}

/// `1/(n v^{3/4}) + 1/(n^{3/2} v^{3/2} |z^2-4|^{1/4})`.
pub fn envelope(z: UpperHalfPoint, n: usize) -> f64 {
    let nf = n as f64;
    let v = z.v();
    let zc = z.z();
    1.0 / (nf * v.powf(0.75)) + 1.0 / (nf.powf(1.5) * v.powf(1.5) * (zc * zc - 4.0).norm().powf(0.25))
}

/// `|Lambda| / envelope`: the implied constant of the envelope at this point.
pub fn envelope_ratio(sample: &StieltjesSample, n: usize) -> f64 {
    sample.lambda_n.norm() / envelope(sample.z, n)
}

/// `I_vert(x)` at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalSample {
    pub x: f64,
    pub v_prime: f64,
    pub integral: f64,
}

/// Terms of the smoothing bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    /// `\int |S_F - S_G|(u + iV) du` over the real line.
    pub integral_top: f64,
    /// `sup_x \int_{v'(x)}^{V} |S_F - S_G|(x + it) dt`.
    pub integral_vertical: f64,
    /// Abscissa attaining the vertical supremum.
    pub sup_x: f64,
    pub term_c1v0: f64,
    pub term_c2eps: f64,
    pub total: f64,
    pub c1: f64,
    pub c2: f64,
    pub v_top: f64,
    pub params: SmoothingParams,
    /// Coarse-grid vertical integrals.
    pub profile: Vec<VerticalSample>,
}

impl BoundBreakdown {
    /// Labeled key/value lines.
    pub fn to_key_values(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("integral_top", self.integral_top),
            ("integral_vertical", self.integral_vertical),
            ("sup_x", self.sup_x),
            ("term_c1v0", self.term_c1v0),
            ("term_c2eps", self.term_c2eps),
            ("total", self.total),
            ("c1", self.c1),
            ("c2", self.c2),
            ("v0", self.params.v0),
            ("epsilon", self.params.epsilon),
            ("v_top", self.v_top),
        ]
    }
}

/// Numerical settings of [`smoothing_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSettings {
    pub c1: f64,
    pub c2: f64,
    pub v_top: f64,
    pub tolerance: f64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        BoundSettings {
            c1: 1.0,
            c2: 1.0,
            v_top: DEFAULT_TOP_HEIGHT,
            tolerance: DEFAULT_QUADRATURE_TOLERANCE,
        }
    }
}

/// `|S_F - S_G|` integrated over the whole horizontal line at height `v`.
///
/// Integrates `[-16, 16]` on unit panels, then adds dyadic shells
/// `[L, 2L]` until the integrand is below [`TAIL_CUTOFF`] at both ends.
pub fn horizontal_integral<F>(sf: &F, v: f64, tol: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let diff = |u: f64| {
        let z = Complex64::new(u, v);
        (sf(z) - stieltjes_at(z)).norm()
    };
    let core: Vec<f64> = (-16..=16).map(f64::from).collect();
    let mut total: f64 = integrate_panels(diff, &core, tol)?;
    let mut l = 16.0;
    while diff(l).max(diff(-l)) >= TAIL_CUTOFF {
        if l >= MAX_TAIL_EXTENT {
            return Err(Error::Quadrature {
                a: -l,
                b: l,
                error: diff(l).max(diff(-l)),
            });
        }
        total += adaptive_simpson(diff, l, 2.0 * l, tol)?;
        total += adaptive_simpson(diff, -2.0 * l, -l, tol)?;
        l *= 2.0;
    }
    Ok(total)
}

/// `\int_{v'}^{V} |S_F - S_G|(x + it) dt`, integrated in `log t`.
pub fn vertical_integral<F>(sf: &F, x: f64, v_prime: f64, v_top: f64, tol: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    if v_prime >= v_top {
        return Ok(0.0);
    }
    let f = |s: f64| {
        let t = s.exp();
        let z = Complex64::new(x, t);
        (sf(z) - stieltjes_at(z)).norm() * t
    };
    let (a, b) = (v_prime.ln(), v_top.ln());
    let panels: Vec<f64> = (0..=8).map(|k| a + (b - a) * k as f64 / 8.0).collect();
    integrate_panels(f, &panels, tol)
}

/// Evaluates the smoothing bound
/// `2 I_top + C1 v0 + C2 eps^{3/2} + 2 sup_{|x| <= 2 - eps/2} I_vert(x)`
/// with `v'(x) = v0 / sqrt(2 - |x|)`.
///
/// The supremum is taken on a [`SUP_GRID_POINTS`] grid and refined by
/// golden-section search on the bracket around the coarse maximum.
pub fn smoothing_bound<F>(sf: &F, params: &SmoothingParams, settings: &BoundSettings) -> Result<BoundBreakdown>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let BoundSettings { c1, c2, v_top, tolerance } = *settings;
    if !(v_top > params.v0) {
        return Err(Error::invalid(format!("top height {v_top} must exceed v0 = {}", params.v0)));
    }
    if !(c1 >= 0.0 && c2 >= 0.0) {
        return Err(Error::invalid("smoothing constants must be nonnegative"));
    }
    let integral_top = horizontal_integral(sf, v_top, tolerance)?;

    let half_width = 2.0 - params.epsilon / 2.0;
    let v_prime = |x: f64| params.v0 / (2.0 - x.abs()).sqrt();
    let vert = |x: f64| vertical_integral(sf, x, v_prime(x), v_top, tolerance);

    let xs: Vec<f64> = (0..SUP_GRID_POINTS)
        .map(|k| -half_width + 2.0 * half_width * k as f64 / (SUP_GRID_POINTS - 1) as f64)
        .collect();
    let profile = xs
        .par_iter()
        .map(|&x| {
            Ok(VerticalSample {
                x,
                v_prime: v_prime(x),
                integral: vert(x)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.integral.total_cmp(&b.1.integral))
        .map(|(k, _)| k)
        .expect("nonempty grid");
    let (mut sup_x, mut sup) = (profile[best].x, profile[best].integral);
    let lo = profile[best.saturating_sub(1)].x;
    let hi = profile[(best + 1).min(profile.len() - 1)].x;
    if let Some((x, value)) = golden_max(&vert, lo, hi)? {
        if value > sup {
            sup_x = x;
            sup = value;
        }
    }

    let term_c1v0 = c1 * params.v0;
    let term_c2eps = c2 * params.epsilon.powf(1.5);
    Ok(BoundBreakdown {
        integral_top,
        integral_vertical: sup,
        sup_x,
        term_c1v0,
        term_c2eps,
        total: 2.0 * integral_top + term_c1v0 + term_c2eps + 2.0 * sup,
        c1,
        c2,
        v_top,
        params: *params,
        profile,
    })
}

fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<Option<(f64, f64)>> {
    if !(b > a) {
        return Ok(None);
    }
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(Some(if fc >= fd { (c, fc) } else { (d, fd) }))
}

/// Smallest common value `C = C1 = C2` making the bound reach `delta`.
pub fn calibrate(delta: f64, breakdown: &BoundBreakdown) -> f64 {
    let p = &breakdown.params;
    let slack = delta - 2.0 * breakdown.integral_top - 2.0 * breakdown.integral_vertical;
    (slack / (p.v0 + p.epsilon.powf(1.5))).max(0.0)
}

/// The four segment integrals of the rectangle `[-L, x] x [v', V]` and the
/// residual of the Cauchy relation between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourCheck {
    /// `\int_{-L}^{x} d(u + iv') du`.
    pub bottom: Complex64,
    /// `\int_{-L}^{x} d(u + iV) du`.
    pub top: Complex64,
    /// `i \int_{v'}^{V} d(-L + it) dt`.
    pub left: Complex64,
    /// `i \int_{v'}^{V} d(x + it) dt`.
    pub right: Complex64,
    /// `|bottom - top - left + right|`.
    pub residual: f64,
}

/// Checks `bottom = top + left - right` for `d = S_F - S_G` analytic in the
/// upper half-plane. The left side vanishes as `L` grows, which is what lets
/// the bound drop it.
pub fn contour_check<F, G>(sf: &F, sg: &G, x: f64, v_prime: f64, v_top: f64, l: f64, tol: f64) -> Result<ContourCheck>
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    if !(v_prime > 0.0 && v_top > v_prime && -l < x) {
        return Err(Error::invalid(format!(
            "contour needs 0 < v' < V and -L < x, got v' = {v_prime}, V = {v_top}, L = {l}, x = {x}"
        )));
    }
    let d = |z: Complex64| sf(z) - sg(z);
    let horizontal = |v: f64| -> Result<Complex64> {
        let panels = unit_panels(-l, x);
        integrate_panels(|u| d(Complex64::new(u, v)), &panels, tol)
    };
    let vertical = |u: f64| -> Result<Complex64> {
        let (a, b) = (v_prime.ln(), v_top.ln());
        let f = |s: f64| {
            let t = s.exp();
            d(Complex64::new(u, t)) * t
        };
        let panels: Vec<f64> = (0..=8).map(|k| a + (b - a) * k as f64 / 8.0).collect();
        Ok(Complex64::i() * integrate_panels(f, &panels, tol)?)
    };
    let bottom = horizontal(v_prime)?;
    let top = horizontal(v_top)?;
    let left = vertical(-l)?;
    let right = vertical(x)?;
    Ok(ContourCheck {
        bottom,
        top,
        left,
        right,
        residual: (bottom - top - left + right).norm(),
    })
}

fn unit_panels(a: f64, b: f64) -> Vec<f64> {
    let mut p = vec![a];
    let mut t = a.floor() + 1.0;
    while t < b {
        p.push(t);
        t += 1.0;
    }
    p.push(b);
    p
}

/// One CSV row of the vertical profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub x: f64,
    pub v_prime: f64,
    pub integral_vertical: f64,
}

pub fn profile_rows(b: &BoundBreakdown) -> Vec<ProfileRow> {
    b.profile
        .iter()
        .map(|s| ProfileRow {
            x: s.x,
            v_prime: s.v_prime,
            integral_vertical: s.integral,
        })
        .collect()
}
