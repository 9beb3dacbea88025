//! Spectra, empirical spectral distributions and their Kolmogorov distance
//! to the semicircle law.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::eigen::{symmetric_eigen, symmetric_eigenvalues, EigenDecomposition};
use crate::ensemble::SymmetricMatrix;
use crate::semicircle::{cdf_unchecked, quantile};
use crate::{Error, Result};

/// Eigenvalues of one matrix, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    lambdas: Vec<f64>,
}

impl Spectrum {
    /// Wraps an already-sorted sequence.
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("spectrum contains non-finite values"));
        }
        if lambdas.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("spectrum is not sorted ascending"));
        }
        Ok(Spectrum { lambdas })
    }

    pub fn from_unsorted(mut lambdas: Vec<f64>) -> Result<Self> {
        lambdas.sort_by(f64::total_cmp);
        Self::new(lambdas)
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn into_values(self) -> Vec<f64> {
        self.lambdas
    }

    /// One eigenvalue per line in shortest round-trip decimal form.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for x in &self.lambdas {
            writeln!(w, "{x:?}")?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::invalid(e.to_string()))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            values.push(
                t.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("line {}: '{t}': {e}", i + 1)))?,
            );
        }
        Self::from_unsorted(values)
    }
}

pub fn eigenvalues(w: &SymmetricMatrix) -> Result<Spectrum> {
    Ok(Spectrum {
        lambdas: symmetric_eigenvalues(w)?,
    })
}

pub fn eigen_decomposition(w: &SymmetricMatrix) -> Result<EigenDecomposition> {
    symmetric_eigen(w)
}

/// Step distribution function putting mass `weight` on every atom.
///
/// The weight is tied to a declared normalizer rather than the atom count,
/// so the ESD of a minor of an `n x n` matrix keeps mass `1/n` per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Esd {
    weight: f64,
    atoms: Vec<f64>,
}

impl Esd {
    pub fn of_spectrum(s: &Spectrum) -> Self {
        Self::with_normalizer(s, s.len())
    }

    pub fn with_normalizer(s: &Spectrum, normalizer: usize) -> Self {
        Esd {
            weight: 1.0 / normalizer as f64,
            atoms: s.lambdas.clone(),
        }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.weight * self.atoms.len() as f64
    }

    /// `F(x)`: mass of atoms `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms.partition_point(|&a| a <= x) as f64 * self.weight
    }

    /// Stieltjes transform `sum_k weight / (atom_k - z)`.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        self.atoms.iter().map(|&a| 1.0 / (a - z)).sum::<Complex64>() * self.weight
    }

    /// `sup_x |F(x) - G(x)|` against the semicircle law.
    pub fn kolmogorov_distance(&self) -> f64 {
        // cumulative mass as count * weight, so equal atoms give exact steps
        let w = self.weight;
        let mut sup = 0.0_f64;
        for (k, &x) in self.atoms.iter().enumerate() {
            let g = cdf_unchecked(x);
            sup = sup.max((k as f64 * w - g).abs()).max(((k + 1) as f64 * w - g).abs());
        }
        sup.max((self.atoms.len() as f64 * w - 1.0).abs()).min(1.0)
    }

    /// `sup_x |F(x) - H(x)|` between two step functions.
    pub fn sup_distance(&self, other: &Esd) -> f64 {
        let (a, b) = (&self.atoms, &other.atoms);
        let (mut i, mut j) = (0, 0);
        let mut sup = 0.0_f64;
        while i < a.len() || j < b.len() {
            let x = match (a.get(i), b.get(j)) {
                (Some(&p), Some(&q)) => p.min(q),
                (Some(&p), None) => p,
                (None, Some(&q)) => q,
                (None, None) => unreachable!(),
            };
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            sup = sup.max((i as f64 * self.weight - j as f64 * other.weight).abs());
        }
        sup
    }
}

impl Esd {
    /// `sup_x [F(x) - H(x + slack)]`, at least 0.
    ///
    /// With a small `slack` this is the one-sided distance measured so that
    /// atoms which coincide in exact arithmetic but were perturbed by rounding
    /// still compare as equal.
    pub fn excess_over(&self, other: &Esd, slack: f64) -> f64 {
        self.atoms
            .iter()
            .map(|&x| self.cdf(x) - other.cdf(x + slack))
            .fold(0.0, f64::max)
    }

    /// Two-sided version of [`Esd::excess_over`].
    pub fn sup_distance_with_slack(&self, other: &Esd, slack: f64) -> f64 {
        self.excess_over(other, slack).max(other.excess_over(self, slack))
    }
}

/// Kolmogorov distance to the semicircle law of the step function with the
/// given `(atom, mass)` pairs, which must be sorted by atom.
///
/// Between atoms the step function is flat while `G` is monotone, so the
/// supremum is attained at an atom (value or left limit) or in the limits
/// `x -> ±inf`.
pub fn kolmogorov_weighted(atoms: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut below = 0.0_f64;
    let mut sup = 0.0_f64;
    for (x, w) in atoms {
        let g = cdf_unchecked(x);
        let above = below + w;
        sup = sup.max((below - g).abs()).max((above - g).abs());
        below = above;
    }
    // x -> +inf: G = 1
    sup.max((below - 1.0).abs()).min(1.0)
}

/// Pooled ESD of replicate spectra: the Monte Carlo estimate of the expected ESD.
pub fn mean_esd(spectra: &[Spectrum]) -> Result<Esd> {
    let Some(first) = spectra.first() else {
        return Err(Error::invalid("no spectra to average"));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::invalid("empty spectrum"));
    }
    if let Some(bad) = spectra.iter().find(|s| s.len() != n) {
        return Err(Error::invalid(format!(
            "spectra of different sizes: {n} and {}",
            bad.len()
        )));
    }
    let mut atoms: Vec<f64> = spectra.iter().flat_map(|s| s.lambdas.iter().copied()).collect();
    atoms.sort_by(f64::total_cmp);
    Ok(Esd {
        weight: 1.0 / (n * spectra.len()) as f64,
        atoms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityPoint {
    /// 1-based eigenvalue index.
    pub j: usize,
    /// Semicircle quantile `G^{-1}(j / n)`.
    pub gamma: f64,
    /// `|lambda_j - gamma_j|` in units of `min(j, n - j + 1)^{-1/3} n^{-2/3}`.
    pub ratio: f64,
}

pub fn rigidity_scale(j: usize, n: usize) -> f64 {
    let m = j.min(n - j + 1) as f64;
    m.powf(-1.0 / 3.0) * (n as f64).powf(-2.0 / 3.0)
}

/// Deviation of each eigenvalue from its classical location, in edge-adapted units.
pub fn rigidity_profile(s: &Spectrum) -> Result<Vec<RigidityPoint>> {
    let n = s.len();
    if n < 2 {
        return Err(Error::invalid("rigidity profile needs at least two eigenvalues"));
    }
    s.lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let j = i + 1;
            let gamma = quantile(j as f64 / n as f64)?;
            Ok(RigidityPoint {
                j,
                gamma,
                ratio: (lambda - gamma).abs() / rigidity_scale(j, n),
            })
        })
        .collect()
}

/// Numerical rank of a symmetric matrix: eigenvalues above
/// `1e-10 * max(1, max |eigenvalue|)` in magnitude.
pub fn numerical_rank(a: &SymmetricMatrix) -> Result<usize> {
    let l = symmetric_eigenvalues(a)?;
    let top = l.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    Ok(l.iter().filter(|x| x.abs() > 1e-10 * top).count())
}
