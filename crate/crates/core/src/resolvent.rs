//! Resolvent `R(z) = (W - zI)^{-1}` diagnostics.
//!
//! Every identity checked here is exact algebra; the residual report compares
//! two independent computation paths (a dense complex inverse of the full
//! matrix against dense inverses of its principal minors) and records the
//! worst relative discrepancy.
//!
//! Sign convention: with `X = sqrt(n) W`, the Schur complement gives
//! `1 / R_jj = -z - m_n + (eps1 - eps2 - eps3 - eps4)`, so the row error that
//! makes `R_jj = -1/(z + m_n) + eps_hat R_jj / (z + m_n)` an identity is
//! `eps_hat = eps1 - eps2 - eps3 - eps4`, not the plain sum of the four terms.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenDecomposition;
use crate::ensemble::{minor, SymmetricMatrix};
use crate::region::{lem_g, RegionSpec};
use crate::semicircle::{smoothing_params, sqrt_upper, stieltjes, UpperHalfPoint};
use crate::spectral::Spectrum;
use crate::{Error, Result};

const GRID_MANIFEST: &str = include_str!("../data/identity_grid.txt");

/// Tolerance for the exact identities (a)-(f), relative to term magnitudes.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
/// Slack for inequalities, relative to `max(1, |rhs|)`.
pub const INEQUALITY_SLACK: f64 = 1e-12;
/// Scale factors for the `v -> v/s` comparison of diagonal entries.
pub const SCALE_FACTORS: [f64; 3] = [2.0, 4.0, 16.0];

/// The fixed z-grid of the identity suite.
pub fn identity_grid() -> Vec<UpperHalfPoint> {
    GRID_MANIFEST
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|t| t.parse::<f64>().expect("grid manifest"));
            UpperHalfPoint::new(it.next().unwrap(), it.next().unwrap()).expect("grid manifest")
        })
        .collect()
}

/// Dense complex square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.data[j * self.n + k]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|j| self.get(j, j)).sum()
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.n).map(|j| self.get(j, j)).collect()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                let row = &other.data[k * n..(k + 1) * n];
                for (c, &b) in data[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *c += a * b;
                }
            }
        }
        ComplexMatrix { n, data }
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` if singular.
    pub fn inverse(&self) -> Option<ComplexMatrix> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            inv[i * n + i] = Complex64::new(1.0, 0.0);
        }
        for col in 0..n {
            let piv = (col..n).max_by(|&p, &q| a[p * n + col].norm().total_cmp(&a[q * n + col].norm()))?;
            if a[piv * n + col].norm() == 0.0 {
                return None;
            }
            if piv != col {
                for k in 0..n {
                    a.swap(piv * n + k, col * n + k);
                    inv.swap(piv * n + k, col * n + k);
                }
            }
            let d = Complex64::new(1.0, 0.0) / a[col * n + col];
            for k in 0..n {
                a[col * n + k] *= d;
                inv[col * n + k] *= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..n {
                    let (ak, ik) = (a[col * n + k], inv[col * n + k]);
                    a[r * n + k] -= f * ak;
                    inv[r * n + k] -= f * ik;
                }
            }
        }
        Some(ComplexMatrix { n, data: inv })
    }
}

/// Full resolvent matrix `(W - zI)^{-1}` by a dense complex solve.
pub fn resolvent(w: &SymmetricMatrix, z: UpperHalfPoint) -> ComplexMatrix {
    let n = w.dim();
    let zc = z.z();
    let data = (0..n * n)
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            Complex64::new(w.get(j, k), 0.0) - if j == k { zc } else { Complex64::new(0.0, 0.0) }
        })
        .collect();
    ComplexMatrix { n, data }
        .inverse()
        .expect("W - zI is invertible for Im z > 0")
}

pub fn resolvent_diag(w: &SymmetricMatrix, z: UpperHalfPoint) -> Vec<Complex64> {
    resolvent(w, z).diag()
}

/// `R_jj = sum_q u_jq^2 / (lambda_q - z)` from an eigendecomposition.
pub fn resolvent_diag_spectral(ed: &EigenDecomposition, z: UpperHalfPoint) -> Vec<Complex64> {
    let n = ed.dim();
    let zc = z.z();
    let poles: Vec<Complex64> = ed.values.iter().map(|&l| 1.0 / (l - zc)).collect();
    (0..n)
        .map(|j| (0..n).map(|q| poles[q] * ed.component(j, q).powi(2)).sum())
        .collect()
}

/// The ESD's Stieltjes transform at one point, with the semicircle reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesSample {
    pub z: UpperHalfPoint,
    pub m_n: Complex64,
    pub m_n_prime: Complex64,
    pub s: Complex64,
    /// `m_n - s`.
    pub lambda_n: Complex64,
}

pub fn stieltjes_of_spectrum(spectrum: &Spectrum, z: UpperHalfPoint) -> StieltjesSample {
    stieltjes_of_spectrum_with_normalizer(spectrum, z, spectrum.len())
}

/// As [`stieltjes_of_spectrum`] with `1/normalizer` mass per eigenvalue.
pub fn stieltjes_of_spectrum_with_normalizer(spectrum: &Spectrum, z: UpperHalfPoint, normalizer: usize) -> StieltjesSample {
    let zc = z.z();
    let (mut m, mut dm) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for &l in spectrum.values() {
        let r = 1.0 / (l - zc);
        m += r;
        dm += r * r;
    }
    let scale = 1.0 / normalizer as f64;
    let s = stieltjes(z);
    StieltjesSample {
        z,
        m_n: m * scale,
        m_n_prime: dm * scale,
        s,
        lambda_n: m * scale - s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignConvention {
    /// `eps_hat = eps1 - eps2 - eps3 - eps4`.
    SchurCorrected,
}

/// Row-`j` Schur-complement decomposition of the resolvent diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonDecomposition {
    pub j: usize,
    /// `eps1 = X_jj / sqrt(n)`.
    pub eps1: Complex64,
    /// `(1/n) sum_{k != l} X_jk X_jl R^{(j)}_kl`.
    pub eps2: Complex64,
    /// `(1/n) sum_k (X_jk^2 - 1) R^{(j)}_kk`.
    pub eps3: Complex64,
    /// `(1/n) (Tr R^{(j)} - Tr R)`.
    pub eps4: Complex64,
    /// `(1/n) Tr (R^{(j)})^2`.
    pub eta1: Complex64,
    /// `(1/n) sum_{k != l} X_jk X_jl [(R^{(j)})^2]_kl`.
    pub eta2: Complex64,
    /// `(1/n) sum_k (X_jk^2 - 1) [(R^{(j)})^2]_kk`.
    pub eta3: Complex64,
    pub r_jj: Complex64,
    /// `[R^2]_jj`, the derivative `dR_jj/dz`.
    pub r2_jj: Complex64,
    pub minor_trace: Complex64,
    pub trace: Complex64,
    pub sign_convention: SignConvention,
}

impl EpsilonDecomposition {
    pub fn eps_hat(&self) -> Complex64 {
        self.eps1 - self.eps2 - self.eps3 - self.eps4
    }

    /// Sum of magnitudes of the four terms, the floating-point scale of `eps_hat`.
    pub fn eps_magnitude(&self) -> f64 {
        self.eps1.norm() + self.eps2.norm() + self.eps3.norm() + self.eps4.norm()
    }
}

/// All row decompositions of one matrix at one point, sharing the full resolvent.
#[derive(Debug, Clone)]
pub struct RowSet {
    pub z: UpperHalfPoint,
    pub normalizer: usize,
    pub resolvent: ComplexMatrix,
    /// `(1/normalizer) Tr R`.
    pub m_n: Complex64,
    /// `(1/normalizer) Tr R^2`.
    pub m_n_prime: Complex64,
    pub rows: Vec<EpsilonDecomposition>,
}

impl RowSet {
    /// `(1/n) sum_j eps_hat_j R_jj`.
    pub fn t_hat(&self) -> Complex64 {
        self.rows.iter().map(|r| r.eps_hat() * r.r_jj).sum::<Complex64>() / self.normalizer as f64
    }

    fn t_hat_scale(&self) -> f64 {
        self.rows.iter().map(|r| r.eps_magnitude() * r.r_jj.norm()).sum::<f64>() / self.normalizer as f64
    }
}

/// Decomposition of row `j` of `w`, normalized by its own dimension.
pub fn epsilon_decomposition(w: &SymmetricMatrix, z: UpperHalfPoint, j: usize) -> Result<EpsilonDecomposition> {
    if j >= w.dim() {
        return Err(Error::invalid(format!("row {j} out of range for dimension {}", w.dim())));
    }
    let r = resolvent(w, z);
    Ok(decompose_row(w, &r, z, j, w.dim()))
}

/// Decompositions of every row of `w` with traces normalized by `normalizer`
/// (the dimension of the parent matrix when `w` is a minor).
pub fn row_set(w: &SymmetricMatrix, z: UpperHalfPoint, normalizer: usize) -> RowSet {
    let r = resolvent(w, z);
    let n = w.dim();
    let rows = (0..n).map(|j| decompose_row(w, &r, z, j, normalizer)).collect();
    let nf = normalizer as f64;
    let m_n_prime = (0..n)
        .map(|j| (0..n).map(|k| r.get(j, k) * r.get(k, j)).sum::<Complex64>())
        .sum::<Complex64>()
        / nf;
    RowSet {
        z,
        normalizer,
        m_n: r.trace() / nf,
        m_n_prime,
        resolvent: r,
        rows,
    }
}

fn decompose_row(w: &SymmetricMatrix, r: &ComplexMatrix, z: UpperHalfPoint, j: usize, normalizer: usize) -> EpsilonDecomposition {
    let nf = normalizer as f64;
    let root = nf.sqrt();
    let wj = minor(w, &[j]).expect("row index checked by caller");
    let rj = resolvent(&wj, z);
    let m = wj.dim();
    let x: Vec<f64> = (0..w.dim()).filter(|&k| k != j).map(|k| root * w.get(j, k)).collect();

    let mut quad_off = Complex64::new(0.0, 0.0);
    let mut diag_term = Complex64::new(0.0, 0.0);
    for k in 0..m {
        for l in 0..m {
            if k != l {
                quad_off += x[k] * x[l] * rj.get(k, l);
            }
        }
        diag_term += (x[k] * x[k] - 1.0) * rj.get(k, k);
    }
    // (R^{(j)})^2 diagonal, and x^T (R^{(j)})^2 x = y^T y with y = R^{(j)} x (R^{(j)} is complex symmetric)
    let r2_diag: Vec<Complex64> = (0..m).map(|k| (0..m).map(|l| rj.get(k, l) * rj.get(l, k)).sum()).collect();
    let y: Vec<Complex64> = (0..m).map(|k| (0..m).map(|l| rj.get(k, l) * x[l]).sum()).collect();
    let full_quad: Complex64 = y.iter().map(|v| v * v).sum();
    let diag_quad: Complex64 = (0..m).map(|k| x[k] * x[k] * r2_diag[k]).sum();
    let eta3: Complex64 = (0..m).map(|k| (x[k] * x[k] - 1.0) * r2_diag[k]).sum();

    let trace = r.trace();
    let minor_trace = rj.trace();
    EpsilonDecomposition {
        j,
        eps1: Complex64::new(w.get(j, j), 0.0),
        eps2: quad_off / nf,
        eps3: diag_term / nf,
        eps4: (minor_trace - trace) / nf,
        eta1: r2_diag.iter().sum::<Complex64>() / nf,
        eta2: (full_quad - diag_quad) / nf,
        eta3: eta3 / nf,
        r_jj: r.get(j, j),
        r2_jj: (0..w.dim()).map(|k| r.get(j, k) * r.get(k, j)).sum(),
        minor_trace,
        trace,
        sign_convention: SignConvention::SchurCorrected,
    }
}

/// Where a residual was observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub n: usize,
    pub seed: u64,
    /// Row index, when the check is row-wise.
    pub j: Option<usize>,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    /// Exact identity; residual is a relative discrepancy.
    Identity,
    /// Inequality `lhs <= rhs`; residual is the relative excess `max(0, (lhs - rhs) / max(1, |rhs|))`.
    Inequality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub kind: CheckKind,
    pub residual: f64,
    pub location: Location,
    pub checks: u64,
    pub violations: u64,
}

/// Max-reduction of residuals per named check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdentityReport {
    entries: BTreeMap<String, CheckResult>,
}

impl IdentityReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &BTreeMap<String, CheckResult> {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.entries.get(name)
    }

    pub fn record_identity(&mut self, name: &str, residual: f64, loc: Location, tolerance: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.push(name, CheckKind::Identity, residual, loc, residual > tolerance);
    }

    pub fn record_inequality(&mut self, name: &str, lhs: f64, rhs: f64, loc: Location) {
        let excess = (lhs - rhs) / rhs.abs().max(1.0);
        let excess = if excess.is_nan() { f64::INFINITY } else { excess.max(0.0) };
        self.push(name, CheckKind::Inequality, excess, loc, excess > INEQUALITY_SLACK);
    }

    fn push(&mut self, name: &str, kind: CheckKind, residual: f64, location: Location, violated: bool) {
        let fresh = CheckResult {
            kind,
            residual,
            location,
            checks: 1,
            violations: u64::from(violated),
        };
        match self.entries.get_mut(name) {
            Some(e) => e.absorb(&fresh),
            None => {
                self.entries.insert(name.to_string(), fresh);
            }
        }
    }

    /// Associative, order-independent merge.
    pub fn merge(&mut self, other: &IdentityReport) {
        for (name, r) in &other.entries {
            match self.entries.get_mut(name) {
                Some(e) => e.absorb(r),
                None => {
                    self.entries.insert(name.clone(), *r);
                }
            }
        }
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.entries
            .values()
            .filter(|r| r.kind == CheckKind::Identity)
            .fold(0.0, |m, r| m.max(r.residual))
    }

    pub fn total_violations(&self) -> u64 {
        self.entries.values().map(|r| r.violations).sum()
    }

    /// Names of checks with at least one violation.
    pub fn failures(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, r)| r.violations > 0)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    /// Flat table: one line per check, tab-separated
    /// `name kind residual checks violations n seed j u v`.
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "name\tkind\tresidual\tchecks\tviolations\tn\tseed\tj\tu\tv")?;
        for (name, r) in &self.entries {
            let kind = match r.kind {
                CheckKind::Identity => "identity",
                CheckKind::Inequality => "inequality",
            };
            let j = r.location.j.map_or("-".to_string(), |j| j.to_string());
            writeln!(
                w,
                "{name}\t{kind}\t{:e}\t{}\t{}\t{}\t{}\t{j}\t{:?}\t{:?}",
                r.residual, r.checks, r.violations, r.location.n, r.location.seed, r.location.u, r.location.v
            )?;
        }
        Ok(())
    }

    pub fn read_table<R: BufRead>(r: R) -> Result<IdentityReport> {
        let bad = |m: String| Error::invalid(format!("identity table: {m}"));
        let mut report = IdentityReport::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 10 {
                return Err(bad(format!("line {} has {} fields", i + 1, f.len())));
            }
            let num = |t: &str| t.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", i + 1)));
            let int = |t: &str| t.parse::<u64>().map_err(|e| bad(format!("line {}: {e}", i + 1)));
            let kind = match f[1] {
                "identity" => CheckKind::Identity,
                "inequality" => CheckKind::Inequality,
                k => return Err(bad(format!("unknown kind '{k}'"))),
            };
            report.entries.insert(
                f[0].to_string(),
                CheckResult {
                    kind,
                    residual: num(f[2])?,
                    checks: int(f[3])?,
                    violations: int(f[4])?,
                    location: Location {
                        n: int(f[5])? as usize,
                        seed: int(f[6])?,
                        j: if f[7] == "-" { None } else { Some(int(f[7])? as usize) },
                        u: num(f[8])?,
                        v: num(f[9])?,
                    },
                },
            );
        }
        Ok(report)
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_table(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}

impl CheckResult {
    fn absorb(&mut self, other: &CheckResult) {
        // ties broken on location so the merge is order-independent
        let key = |r: &CheckResult| (r.residual, r.location.n, r.location.seed, r.location.j, r.location.u.to_bits(), r.location.v.to_bits());
        if key(other).partial_cmp(&key(self)) == Some(std::cmp::Ordering::Greater) {
            self.residual = other.residual;
            self.location = other.location;
        }
        self.checks += other.checks;
        self.violations += other.violations;
    }
}

fn rel(lhs: Complex64, rhs: Complex64, scale: f64) -> f64 {
    (lhs - rhs).norm() / scale.max(f64::MIN_POSITIVE)
}

/// Runs the identity suite and the deterministic inequality battery for one
/// matrix over a z-grid. `seed` only labels locations. Points of the grid
/// that lie in the spectral window for `(n, a0)` also get the window
/// inequalities.
pub fn identity_report(w: &SymmetricMatrix, z_grid: &[UpperHalfPoint], seed: u64, a0: f64) -> Result<IdentityReport> {
    let n = w.dim();
    if n < 2 {
        return Err(Error::invalid("identity suite needs n >= 2"));
    }
    let mut report = IdentityReport::new();
    let window = smoothing_params(n, a0)
        .ok()
        .filter(|p| p.is_admissible())
        .and_then(|p| RegionSpec::new(n, a0, p.epsilon, 1, 1).ok());
    for &z in z_grid {
        let loc = |j: Option<usize>| Location {
            n,
            seed,
            j,
            u: z.u(),
            v: z.v(),
        };
        let set = row_set(w, z, n);
        identities_for(&set, &mut report, &loc, 0);
        inequalities_for(w, &set, &mut report, &loc, "");

        // the same battery on the first principal minor, normalized by n
        let w1 = minor(w, &[0])?;
        let set1 = row_set(&w1, z, n);
        identities_for(&set1, &mut report, &loc, 1);
        inequalities_for(&w1, &set1, &mut report, &loc, "minor.");

        if let Some(region) = &window {
            if region.contains(z) {
                let g = lem_g(z, n, a0);
                report.record_inequality("lemG.abs", g.two_max_gamma_v, g.abs_z2_minus_4, loc(None));
                report.record_inequality("lemG.product", 2.0 * a0, g.n_v_sqrt, loc(None));
            }
        }
    }
    Ok(report)
}

/// Identities (a)-(f), the Schur identity itself and the solved form of
/// `Lambda`, for a row set built from a matrix with `deleted` rows removed.
fn identities_for(set: &RowSet, report: &mut IdentityReport, loc: &dyn Fn(Option<usize>) -> Location, deleted: usize) {
    let tol = IDENTITY_TOLERANCE;
    let prefix = if deleted == 0 { "" } else { "minor." };
    let name = |s: &str| format!("{prefix}{s}");
    let z = set.z.z();
    let m = set.m_n;
    let nf = set.normalizer as f64;
    let one = Complex64::new(1.0, 0.0);

    for row in &set.rows {
        let l = loc(Some(row.j));
        let eh = row.eps_hat();
        let schur = row.r_jj * (-z - m + eh);
        let scale = row.r_jj.norm() * (z.norm() + m.norm() + row.eps_magnitude());
        report.record_identity(&name("schur"), rel(schur, one, scale.max(1.0)), l, tol);

        // (a)
        let zm = z + m;
        let rhs = -1.0 / zm + eh * row.r_jj / zm;
        let scale = row.r_jj.norm() + (1.0 + row.eps_magnitude() * row.r_jj.norm()) / zm.norm();
        report.record_identity(&name("a.repr001"), rel(row.r_jj, rhs, scale), l, tol);

        if deleted == 0 {
            // (d)
            let lhs = row.trace - row.minor_trace;
            let rhs = row.r2_jj / row.r_jj;
            let scale = row.trace.norm() + row.minor_trace.norm() + rhs.norm();
            report.record_identity(&name("d.trace_drop"), rel(lhs, rhs, scale), l, tol);
        }

        // (e)
        let eta = one + row.eta1 + row.eta2 + row.eta3;
        let rhs = -eta * row.r_jj / nf;
        let scale = (row.trace.norm() + row.minor_trace.norm()) / nf
            + (1.0 + row.eta1.norm() + row.eta2.norm() + row.eta3.norm()) * row.r_jj.norm() / nf;
        report.record_identity(&name("e.eps4_eta"), rel(row.eps4, rhs, scale), l, tol);
    }

    let l = loc(None);
    let t_hat = set.t_hat();
    let t_scale = set.t_hat_scale();
    let s = stieltjes(set.z);
    let lambda = m - s;
    // solved form: m^2 + z m + 1 = T_hat + |J|/n
    let shift = deleted as f64 / nf;
    let t_total = t_hat + shift;

    // (b)
    let lhs = m * m + z * m + one;
    let scale = m.norm_sqr() + z.norm() * m.norm() + 1.0 + t_scale + shift;
    report.record_identity(&name("b.quadratic"), rel(lhs, t_total, scale), l, tol);

    // (c)
    let lhs = lambda * (z + m + s);
    let scale = lambda.norm() * (z.norm() + m.norm() + s.norm()) + t_scale + shift;
    report.record_identity(&name("c.lambda"), rel(lhs, t_total, scale), l, tol);

    // (f)
    let lhs: Complex64 = set.rows.iter().map(|r| r.eps4 * r.r_jj).sum::<Complex64>() / nf;
    let rhs = -set.m_n_prime / nf;
    let scale = set.rows.iter().map(|r| r.eps4.norm() * r.r_jj.norm()).sum::<f64>() / nf + rhs.norm();
    report.record_identity(&name("f.eps4_derivative"), rel(lhs, rhs, scale), l, tol);

    // Lambda = (-sqrt(z^2-4) + sqrt(z^2-4-4 T_tilde)) / 2 with T_tilde = -(T_hat + |J|/n)
    let q = sqrt_upper(z * z - 4.0);
    let t_tilde = -t_total;
    let q2 = sqrt_upper(z * z - 4.0 - 4.0 * t_tilde);
    let solved = 0.5 * (q2 - q);
    let scale = lambda.norm() + m.norm() + s.norm() + q.norm() + q2.norm();
    report.record_identity(&name("lambda_solved"), rel(lambda, solved, scale), l, tol);
}

fn inequalities_for(
    w: &SymmetricMatrix,
    set: &RowSet,
    report: &mut IdentityReport,
    loc: &dyn Fn(Option<usize>) -> Location,
    prefix: &str,
) {
    let name = |s: &str| format!("{prefix}{s}");
    let r = &set.resolvent;
    let dim = r.dim();
    let nf = set.normalizer as f64;
    let v = set.z.v();
    let im_m = set.m_n.im;
    let l0 = loc(None);

    let r2 = r.matmul(r);
    let abs2 = |c: Complex64| c.norm_sqr();

    // res1 holds with equality over the full index set
    let res1: f64 = r.data.iter().map(|&c| abs2(c)).sum::<f64>() / nf;
    report.record_inequality(&name("res1"), res1, im_m / v, l0);
    report.record_identity(
        &name("res1.equality"),
        (res1 - im_m / v).abs() / (im_m / v).max(1.0),
        l0,
        INEQUALITY_SLACK,
    );
    let res3: f64 = (0..dim).map(|l| abs2(r2.get(l, l))).sum::<f64>() / nf;
    report.record_inequality(&name("res3"), res3, im_m / v.powi(3), l0);
    let res5: f64 = r2.data.iter().map(|&c| abs2(c)).sum::<f64>() / nf;
    report.record_inequality(&name("res5"), res5, im_m / v.powi(3), l0);
    report.record_inequality(&name("m_n.bound"), set.m_n.norm(), 1.0 / v, l0);
    report.record_inequality(&name("m_n.im_positive"), -im_m, 0.0, l0);

    let scaled: Vec<(f64, Vec<Complex64>)> = SCALE_FACTORS
        .iter()
        .map(|&s| {
            let zs = UpperHalfPoint::new(set.z.u(), v / s).expect("positive");
            (s, resolvent_diag(w, zs))
        })
        .collect();

    for l in 0..dim {
        let lj = loc(Some(l));
        let rll = r.get(l, l);
        let col: f64 = (0..dim).map(|k| abs2(r.get(k, l))).sum();
        report.record_inequality(&name("res2"), col, rll.im / v, lj);
        let col2: f64 = (0..dim).map(|k| abs2(r2.get(k, l))).sum();
        report.record_inequality(&name("res20"), col2, rll.im / v.powi(3), lj);
        report.record_inequality(&name("r_jj.bound"), rll.norm(), 1.0 / v, lj);
        report.record_inequality(&name("r_jj.im_positive"), -rll.im, 0.0, lj);
        for (s, diag) in &scaled {
            report.record_inequality(&name(&format!("schlein.s{s}")), diag[l].norm(), s * rll.norm(), lj);
        }
    }
    for row in &set.rows {
        report.record_inequality(&name("eps4.bound"), row.eps4.norm(), 1.0 / (nf * v), loc(Some(row.j)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{assemble, sample_entries, EntryLaw, WignerSpec};
    use crate::spectral::eigen_decomposition;

    fn goe(n: usize, seed: u64) -> SymmetricMatrix {
        assemble(&sample_entries(&WignerSpec::new(n, EntryLaw::Gaussian, seed).unwrap()).unwrap())
    }

    fn pt(u: f64, v: f64) -> UpperHalfPoint {
        UpperHalfPoint::new(u, v).unwrap()
    }

    #[test]
    fn zero_and_identity_matrices() {
        let d = resolvent_diag(&SymmetricMatrix::zeros(4), pt(0.0, 1.0));
        assert!(d.iter().all(|c| (c - Complex64::i()).norm() < 1e-15));
        let d = resolvent_diag(&SymmetricMatrix::identity(3), pt(1.0, 1.0));
        assert!(d.iter().all(|c| (c - Complex64::i()).norm() < 1e-15));
    }

    #[test]
    fn dense_and_spectral_paths_agree() {
        for seed in 0..10 {
            let w = goe(8, seed);
            let ed = eigen_decomposition(&w).unwrap();
            for z in identity_grid() {
                let a = resolvent_diag(&w, z);
                let b = resolvent_diag_spectral(&ed, z);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).norm() <= 1e-10 * x.norm().max(1.0));
                    assert!(x.im > 0.0 && x.norm() <= 1.0 / z.v() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn spectrum_transform() {
        let s = stieltjes_of_spectrum(&Spectrum::new(vec![0.0]).unwrap(), pt(0.0, 1.0));
        assert!((s.m_n - Complex64::i()).norm() < 1e-15);
        assert!((s.lambda_n - (s.m_n - s.s)).norm() == 0.0);

        let spec = Spectrum::from_unsorted(vec![-1.2, 0.1, 0.4, 1.9]).unwrap();
        for z in identity_grid() {
            let h = 1e-6;
            let sample = stieltjes_of_spectrum(&spec, z);
            assert!(sample.m_n.im > 0.0);
            let up = stieltjes_of_spectrum(&spec, pt(z.u() + h, z.v())).m_n;
            let dn = stieltjes_of_spectrum(&spec, pt(z.u() - h, z.v())).m_n;
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - sample.m_n_prime).norm() <= 1e-6 * sample.m_n_prime.norm().max(1.0), "{z:?}");
        }
    }

    #[test]
    fn zero_matrix_decomposition_closed_form() {
        let n = 5;
        let z = pt(0.3, 0.7);
        let zc = z.z();
        let e = epsilon_decomposition(&SymmetricMatrix::zeros(n), z, 2).unwrap();
        let nf = n as f64;
        assert_eq!(e.eps1, Complex64::new(0.0, 0.0));
        assert!(e.eps2.norm() < 1e-15);
        assert!((e.eps3 - (nf - 1.0) / (nf * zc)).norm() < 1e-15);
        assert!((e.eps4 - 1.0 / (nf * zc)).norm() < 1e-15);
        assert!((e.r_jj + 1.0 / zc).norm() < 1e-15);
    }

    #[test]
    fn eps4_bound_and_schur_identity() {
        for &n in &[4usize, 8, 16] {
            for seed in 0..5 {
                let w = goe(n, seed);
                for z in identity_grid() {
                    for j in 0..n {
                        let e = epsilon_decomposition(&w, z, j).unwrap();
                        assert!(e.eps4.norm() <= 1.0 / (n as f64 * z.v()) * (1.0 + 1e-12));
                        let prod = e.r_jj * (-z.z() + e.eps1 - (e.eps2 + e.eps3 + e.trace / n as f64 + e.eps4));
                        assert!((prod - 1.0).norm() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_matrix_report_is_exact() {
        let report = identity_report(&SymmetricMatrix::zeros(6), &[pt(0.0, 1.0)], 0, 1.0).unwrap();
        assert!(report.max_identity_residual() <= 1e-14, "{report}");
        assert_eq!(report.total_violations(), 0);
    }

    #[test]
    fn random_report_residuals() {
        let mut total = IdentityReport::new();
        for seed in 0..20 {
            let w = goe(8, seed);
            total.merge(&identity_report(&w, &identity_grid(), seed, 1.0).unwrap());
        }
        assert!(total.max_identity_residual() <= 1e-9, "{total}");
        assert!(total.failures().is_empty(), "{total}");
        for key in ["a.repr001", "b.quadratic", "c.lambda", "d.trace_drop", "e.eps4_eta", "f.eps4_derivative"] {
            assert!(total.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn merge_is_order_independent() {
        let w1 = goe(6, 1);
        let w2 = goe(6, 2);
        let grid = identity_grid();
        let a = identity_report(&w1, &grid, 1, 1.0).unwrap();
        let b = identity_report(&w2, &grid, 2, 1.0).unwrap();
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
    }

    #[test]
    fn table_round_trip() {
        let report = identity_report(&goe(4, 3), &identity_grid()[..2], 3, 1.0).unwrap();
        let mut buf = Vec::new();
        report.write_table(&mut buf).unwrap();
        let back = IdentityReport::read_table(&buf[..]).unwrap();
        assert_eq!(back.entries().len(), report.entries().len());
        for (k, r) in report.entries() {
            let b = back.get(k).unwrap();
            assert_eq!((b.kind, b.checks, b.violations, b.location), (r.kind, r.checks, r.violations, r.location));
            assert!((b.residual - r.residual).abs() <= 1e-15 * r.residual.max(1e-300) + 1e-300 || b.residual == r.residual);
        }
    }

    #[test]
    fn inverse_of_identity() {
        let m = ComplexMatrix {
            n: 2,
            data: vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 4.0)],
        };
        let inv = m.inverse().unwrap();
        assert!((inv.get(0, 0) - 0.5).norm() < 1e-16);
        assert!((inv.get(1, 1) - Complex64::new(0.0, -0.25)).norm() < 1e-16);
        let singular = ComplexMatrix {
            n: 1,
            data: vec![Complex64::new(0.0, 0.0)],
        };
        assert!(singular.inverse().is_none());
    }
}
