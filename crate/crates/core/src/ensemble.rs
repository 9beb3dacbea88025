//! Wigner ensembles: entry laws, sampling, truncation and minors.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::rng::entry_stream;
use crate::{Error, Result};

const MOMENT_TOL: f64 = 1e-12;

/// Distribution of a single unscaled entry `X_jk`.
///
/// Every law has mean 0 and variance 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum EntryLaw {
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    UniformScaled,
    /// Finitely supported law; build with [`EntryLaw::custom_discrete`].
    CustomDiscrete { values: Vec<f64>, probs: Vec<f64> },
}

impl EntryLaw {
    pub fn custom_discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let law = EntryLaw::CustomDiscrete { values, probs };
        law.validate()?;
        Ok(law)
    }

    pub fn name(&self) -> &'static str {
        match self {
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::UniformScaled => "uniform-scaled",
            EntryLaw::CustomDiscrete { .. } => "custom-discrete",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let EntryLaw::CustomDiscrete { values, probs } = self else {
            return Ok(());
        };
        let bad = |reason: String| Error::InvalidLaw {
            law: self.name().into(),
            reason,
        };
        if values.is_empty() || values.len() != probs.len() {
            return Err(bad("values and probabilities must be nonempty and of equal length".into()));
        }
        if values.iter().chain(probs).any(|x| !x.is_finite()) || probs.iter().any(|&p| p < 0.0) {
            return Err(bad("values must be finite and probabilities nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        let mean: f64 = values.iter().zip(probs).map(|(x, p)| x * p).sum();
        let var: f64 = values.iter().zip(probs).map(|(x, p)| x * x * p).sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(bad(format!("probabilities sum to {total}")));
        }
        if mean.abs() > MOMENT_TOL {
            return Err(bad(format!("mean {mean} is not 0")));
        }
        if (var - 1.0).abs() > MOMENT_TOL {
            return Err(bad(format!("variance {var} is not 1")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EntryLaw::Gaussian => rng.sample(StandardNormal),
            EntryLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::UniformScaled => {
                let r = 3f64.sqrt();
                rng.random_range(-r..r)
            }
            EntryLaw::CustomDiscrete { values, probs } => {
                let mut t: f64 = rng.random();
                for (x, p) in values.iter().zip(probs) {
                    if t < *p {
                        return *x;
                    }
                    t -= p;
                }
                *values.last().unwrap()
            }
        }
    }

    /// `E |X|^4`.
    pub fn mu4(&self) -> f64 {
        self.abs_moment(4)
    }

    /// `E |X|^8`, reported alongside `mu4` for the eight-moment variant of the rate theorem.
    pub fn mu8(&self) -> f64 {
        self.abs_moment(8)
    }

    fn abs_moment(&self, k: i32) -> f64 {
        match self {
            // E X^{2m} = (2m-1)!!
            EntryLaw::Gaussian => (1..k).step_by(2).map(f64::from).product(),
            EntryLaw::Rademacher => 1.0,
            EntryLaw::UniformScaled => 3f64.powi(k / 2) / f64::from(k + 1),
            EntryLaw::CustomDiscrete { values, probs } => {
                values.iter().zip(probs).map(|(x, p)| x.abs().powi(k) * p).sum()
            }
        }
    }

    /// Exact `(E X 1{|X| <= t}, E X^2 1{|X| <= t})`.
    pub fn truncated_moments(&self, t: f64) -> (f64, f64) {
        match self {
            EntryLaw::Gaussian => {
                let inside = erf(t / std::f64::consts::SQRT_2);
                let tail = t * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * t * t).exp();
                (0.0, inside - tail)
            }
            EntryLaw::Rademacher => {
                if t >= 1.0 {
                    (0.0, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            EntryLaw::UniformScaled => {
                let r = 3f64.sqrt();
                if t >= r {
                    (0.0, 1.0)
                } else {
                    (0.0, t * t * t / (3.0 * r))
                }
            }
            EntryLaw::CustomDiscrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(x, _)| x.abs() <= t)
                .fold((0.0, 0.0), |(m1, m2), (x, p)| (m1 + x * p, m2 + x * x * p)),
        }
    }

    /// Largest possible `|X|`, if bounded.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            EntryLaw::Gaussian => None,
            EntryLaw::Rademacher => Some(1.0),
            EntryLaw::UniformScaled => Some(3f64.sqrt()),
            EntryLaw::CustomDiscrete { values, .. } => values.iter().map(|x| x.abs()).reduce(f64::max),
        }
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryLaw::CustomDiscrete { values, probs } => {
                write!(f, "discrete:")?;
                for (i, (x, p)) in values.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}@{p}")?;
                }
                Ok(())
            }
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for EntryLaw {
    type Err = Error;

    /// `gaussian`, `rademacher`, `uniform` / `uniform-scaled`, or
    /// `discrete:x1@p1,x2@p2,...`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "goe" | "normal" => return Ok(EntryLaw::Gaussian),
            "rademacher" => return Ok(EntryLaw::Rademacher),
            "uniform" | "uniform-scaled" => return Ok(EntryLaw::UniformScaled),
            _ => {}
        }
        let Some(body) = s.trim().strip_prefix("discrete:") else {
            return Err(Error::invalid(format!("unknown entry law '{s}'")));
        };
        let mut values = Vec::new();
        let mut probs = Vec::new();
        for atom in body.split(',') {
            let (x, p) = atom
                .split_once('@')
                .ok_or_else(|| Error::invalid(format!("discrete atom '{atom}' is not x@p")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("discrete atom '{atom}': {e}")))
            };
            values.push(parse(x)?);
            probs.push(parse(p)?);
        }
        EntryLaw::custom_discrete(values, probs)
    }
}

/// Full description of one ensemble draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSpec {
    pub n: usize,
    pub law: EntryLaw,
    pub seed: u64,
    /// Truncation constant: entries are capped at `d0 * n^{1/4}`.
    pub d0: f64,
    pub apply_pipeline: bool,
}

impl WignerSpec {
    pub fn new(n: usize, law: EntryLaw, seed: u64) -> Result<Self> {
        let spec = WignerSpec {
            n,
            law,
            seed,
            d0: 1.0,
            apply_pipeline: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_pipeline(mut self, d0: f64) -> Result<Self> {
        self.d0 = d0;
        self.apply_pipeline = true;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::invalid(format!("D0 must be positive, got {}", self.d0)));
        }
        self.law.validate()
    }
}

/// Dense real symmetric matrix, stored in full row-major form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper(n, |j, k| if j == k { 1.0 } else { 0.0 })
    }

    /// Builds the matrix from its upper triangle `f(j, k)`, `j <= k`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for j in 0..n {
            for k in j..n {
                let x = f(j, k);
                m.data[j * n + k] = x;
                m.data[k * n + j] = x;
            }
        }
        m
    }

    /// Accepts a full row-major array; fails unless it is exactly symmetric.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::invalid(format!("expected {} entries, got {}", n * n, data.len())));
        }
        let m = SymmetricMatrix { n, data };
        for j in 0..n {
            for k in 0..j {
                if m.get(j, k).to_bits() != m.get(k, j).to_bits() {
                    return Err(Error::invalid(format!("entries ({j},{k}) and ({k},{j}) differ")));
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.n + k]
    }

    /// Sets both `(j, k)` and `(k, j)`.
    pub fn set(&mut self, j: usize, k: usize, x: f64) {
        self.data[j * self.n + k] = x;
        self.data[k * self.n + j] = x;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SymmetricMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.get(j, j)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|j| (0..j).all(|k| self.get(j, k).to_bits() == self.get(k, j).to_bits()))
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        if self.n != other.n {
            return Err(Error::invalid("dimension mismatch"));
        }
        Ok(SymmetricMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Stable 64-bit fingerprint of the entries, used in error reports.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the bit patterns
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in std::iter::once(self.n as u64).chain(self.data.iter().map(|x| x.to_bits())) {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// Writes the plain-text dump: `n=<n>` then one whitespace-separated row per line.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n={}", self.n)?;
        for j in 0..self.n {
            let row: Vec<String> = self.row(j).iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<SymmetricMatrix> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::invalid("empty matrix dump"))?
            .map_err(|e| Error::invalid(e.to_string()))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::invalid(format!("bad matrix header '{header}'")))?;
        let mut data = Vec::with_capacity(n * n);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::invalid(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("row {i}: '{tok}': {e}")))?,
                );
            }
            if data.len() - before != n {
                return Err(Error::invalid(format!("row {i} has {} entries, expected {n}", data.len() - before)));
            }
        }
        Self::from_row_major(n, data)
    }
}

/// Draws the unscaled matrix `X`: upper-triangle entries i.i.d. from the law, mirrored.
pub fn sample_entries(spec: &WignerSpec) -> Result<SymmetricMatrix> {
    spec.validate()?;
    Ok(SymmetricMatrix::from_upper(spec.n, |j, k| {
        spec.law.sample(&mut entry_stream(spec.seed, j, k))
    }))
}

/// `W = X / sqrt(n)`.
pub fn assemble(x: &SymmetricMatrix) -> SymmetricMatrix {
    let scale = 1.0 / (x.dim() as f64).sqrt();
    x.map(|v| v * scale)
}

/// Deletes the rows and columns listed in `deleted` (0-based).
pub fn minor(w: &SymmetricMatrix, deleted: &[usize]) -> Result<SymmetricMatrix> {
    let n = w.dim();
    if let Some(&bad) = deleted.iter().find(|&&j| j >= n) {
        return Err(Error::invalid(format!("index {bad} out of range for dimension {n}")));
    }
    let keep: Vec<usize> = (0..n).filter(|j| !deleted.contains(j)).collect();
    let m = keep.len();
    let mut data = Vec::with_capacity(m * m);
    for &j in &keep {
        data.extend(keep.iter().map(|&k| w.get(j, k)));
    }
    Ok(SymmetricMatrix { n: m, data })
}

/// Output of the truncate / recenter / rescale pipeline.
#[derive(Debug, Clone)]
pub struct Standardized {
    /// `X 1{|X| <= c n^{1/4}}`.
    pub hat: SymmetricMatrix,
    /// `hat - E hat`.
    pub tilde: SymmetricMatrix,
    /// `tilde / sigma`.
    pub breve: SymmetricMatrix,
    /// Per-entry standard deviation of the truncated entry.
    pub sigma: SymmetricMatrix,
    /// `E hat` for each entry.
    pub mean_hat: SymmetricMatrix,
    pub threshold: f64,
}

/// Truncates at `c n^{1/4}`, recenters and rescales to unit variance.
///
/// Truncated moments are exact for every built-in law; entries are i.i.d.,
/// so `E X̂_jk` and `sigma_jk` are the same for every position.
pub fn standardize_pipeline(x: &SymmetricMatrix, law: &EntryLaw, c: f64) -> Result<Standardized> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("truncation constant must be positive, got {c}")));
    }
    law.validate()?;
    let n = x.dim();
    let threshold = c * (n as f64).powf(0.25);
    let (m1, m2) = law.truncated_moments(threshold);
    let var = m2 - m1 * m1;
    if !(var > 0.0) {
        return Err(Error::DegenerateTruncation {
            law: law.name().into(),
            threshold,
        });
    }
    let sigma = var.sqrt().min(1.0);
    let hat = x.map(|v| if v.abs() <= threshold { v } else { 0.0 });
    let tilde = hat.map(|v| v - m1);
    let breve = tilde.map(|v| v / sigma);
    Ok(Standardized {
        hat,
        tilde,
        breve,
        sigma: SymmetricMatrix::from_upper(n, |_, _| sigma),
        mean_hat: SymmetricMatrix::from_upper(n, |_, _| m1),
        threshold,
    })
}

/// `D1` such that `max |X̆_jk| <= D1 n^{1/4}` after the pipeline with constant `c`.
pub fn breve_bound(law: &EntryLaw, c: f64, n: usize) -> Result<f64> {
    let q = (n as f64).powf(0.25);
    let threshold = c * q;
    let (m1, m2) = law.truncated_moments(threshold);
    let var = m2 - m1 * m1;
    if !(var > 0.0) {
        return Err(Error::DegenerateTruncation {
            law: law.name().into(),
            threshold,
        });
    }
    let cap = law.sup_abs().map_or(threshold, |s| s.min(threshold));
    Ok((cap + m1.abs()) / var.sqrt() / q)
}

/// Number of rows of `a - b` that contain a nonzero entry.
pub fn modified_rows(a: &SymmetricMatrix, b: &SymmetricMatrix) -> usize {
    (0..a.dim())
        .filter(|&j| a.row(j).iter().zip(b.row(j)).any(|(x, y)| x != y))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampling_is_deterministic_and_symmetric() {
        let spec = WignerSpec::new(17, EntryLaw::Gaussian, 42).unwrap();
        let a = sample_entries(&spec).unwrap();
        let b = sample_entries(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.is_symmetric());
        assert!(a.sub(&a.clone()).unwrap().max_abs() == 0.0);
        let other = sample_entries(&WignerSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rademacher_entries_and_mean() {
        let spec = WignerSpec::new(30, EntryLaw::Rademacher, 5).unwrap();
        let x = sample_entries(&spec).unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 1.0 || v == -1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000;
        let sum: f64 = (0..draws).map(|_| EntryLaw::Rademacher.sample(&mut rng)).sum();
        assert!((sum / draws as f64).abs() <= 4.0 / (draws as f64).sqrt());
    }

    #[test]
    fn law_moments() {
        assert_eq!(EntryLaw::Gaussian.mu4(), 3.0);
        assert_eq!(EntryLaw::Gaussian.mu8(), 105.0);
        assert_eq!(EntryLaw::Rademacher.mu4(), 1.0);
        assert!((EntryLaw::UniformScaled.mu4() - 1.8).abs() < 1e-15);
        assert!((EntryLaw::UniformScaled.mu8() - 9.0).abs() < 1e-14);
        for law in [EntryLaw::Gaussian, EntryLaw::UniformScaled] {
            let (m1, m2) = law.truncated_moments(1e3);
            assert_eq!(m1, 0.0);
            assert!((m2 - 1.0).abs() < 1e-15, "{law}");
        }
    }

    #[test]
    fn custom_law_validation() {
        assert!(EntryLaw::custom_discrete(vec![-1.0, 1.0], vec![0.5, 0.5]).is_ok());
        assert!(EntryLaw::custom_discrete(vec![0.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(EntryLaw::custom_discrete(vec![-2.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(EntryLaw::custom_discrete(vec![-1.0, 1.0], vec![0.5]).is_err());
        let law: EntryLaw = "discrete:-1@0.5,1@0.5".parse().unwrap();
        assert_eq!(law.to_string().parse::<EntryLaw>().unwrap(), law);
        assert_eq!("goe".parse::<EntryLaw>().unwrap(), EntryLaw::Gaussian);
        assert!("cauchy".parse::<EntryLaw>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(WignerSpec::new(0, EntryLaw::Gaussian, 1).is_err());
        let spec = WignerSpec::new(4, EntryLaw::Gaussian, 1).unwrap();
        assert!(spec.clone().with_pipeline(0.0).is_err());
        assert!(spec.with_pipeline(2.0).unwrap().apply_pipeline);
    }

    #[test]
    fn pipeline_is_identity_on_bounded_standardized_law() {
        let n = 16;
        let x = sample_entries(&WignerSpec::new(n, EntryLaw::Rademacher, 3).unwrap()).unwrap();
        // c n^{1/4} = 1 exactly at the smallest admissible c
        let p = standardize_pipeline(&x, &EntryLaw::Rademacher, 0.5).unwrap();
        assert_eq!(p.threshold, 1.0);
        assert_eq!(p.hat, x);
        assert_eq!(p.tilde, x);
        assert_eq!(p.breve, x);
        let again = standardize_pipeline(&p.breve, &EntryLaw::Rademacher, 0.5).unwrap();
        assert!(again.breve.sub(&p.breve).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn pipeline_zeroes_large_entries() {
        let n = 16usize;
        let big = 10.0 * (n as f64).powf(0.25);
        let mut x = SymmetricMatrix::zeros(n);
        x.set(2, 5, big);
        x.set(0, 0, 0.5);
        let p = standardize_pipeline(&x, &EntryLaw::Gaussian, 1.0).unwrap();
        assert_eq!(p.hat.get(2, 5), 0.0);
        assert_eq!(p.hat.get(5, 2), 0.0);
        assert_eq!(p.hat.get(0, 0), 0.5);
        assert!(p.hat.is_symmetric() && p.tilde.is_symmetric() && p.breve.is_symmetric());
    }

    #[test]
    fn pipeline_two_point_law_matches_hand_moments() {
        // values -1/sqrt2 (prob 2/3) and sqrt2 (prob 1/3): mean 0, variance 1.
        let s2 = std::f64::consts::SQRT_2;
        let law = EntryLaw::custom_discrete(vec![-1.0 / s2, s2], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let n = 16;
        // threshold c n^{1/4} = 1 removes the atom at sqrt2
        let c = 0.5;
        let x = sample_entries(&WignerSpec::new(n, law.clone(), 9).unwrap()).unwrap();
        let p = standardize_pipeline(&x, &law, c).unwrap();
        let mean_hat = -s2 / 3.0; // (2/3)(-1/sqrt2)
        let second = 1.0 / 3.0; // (2/3)(1/2)
        let sigma = (second - mean_hat * mean_hat).sqrt();
        assert!((sigma - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.sigma.get(0, 1) - sigma).abs() <= 1e-12);
        assert!((p.mean_hat.get(3, 3) - mean_hat).abs() <= 1e-12);
        for j in 0..n {
            for k in 0..n {
                let v = x.get(j, k);
                let hat = if v.abs() <= 1.0 { v } else { 0.0 };
                assert_eq!(p.hat.get(j, k), hat);
                assert!((p.breve.get(j, k) - (hat - mean_hat) / sigma).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_truncation_names_law() {
        let x = SymmetricMatrix::identity(16);
        let err = standardize_pipeline(&x, &EntryLaw::Rademacher, 0.25).unwrap_err();
        assert!(err.to_string().contains("rademacher"), "{err}");
    }

    #[test]
    fn breve_entries_respect_bound() {
        for law in [EntryLaw::Gaussian, EntryLaw::Rademacher, EntryLaw::UniformScaled] {
            for &n in &[16usize, 100, 1000] {
                let c = 1.0;
                let x = sample_entries(&WignerSpec::new(n.min(200), law.clone(), n as u64).unwrap()).unwrap();
                let p = standardize_pipeline(&x, &law, c).unwrap();
                let d1 = breve_bound(&law, c, x.dim()).unwrap();
                assert!(p.breve.max_abs() <= d1 * (x.dim() as f64).powf(0.25) + 1e-12, "{law} n={n}");
            }
        }
    }

    #[test]
    fn assemble_scaling() {
        let mut x = SymmetricMatrix::zeros(4);
        x.set(1, 2, 2.0);
        let w = assemble(&x);
        assert_eq!(w.get(1, 2), 1.0);
        assert_eq!(w.get(2, 1), 1.0);
        assert_eq!(assemble(&SymmetricMatrix::zeros(5)), SymmetricMatrix::zeros(5));
        let x = sample_entries(&WignerSpec::new(9, EntryLaw::Gaussian, 1).unwrap()).unwrap();
        assert!((assemble(&x).frobenius_norm() - x.frobenius_norm() / 3.0).abs() <= 1e-14 * x.frobenius_norm());
    }

    #[test]
    fn minor_deletes_rows_and_columns() {
        let w = SymmetricMatrix::from_upper(3, |j, k| (10 * j + k) as f64);
        assert_eq!(minor(&w, &[]).unwrap(), w);
        let m = minor(&w, &[1]).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.as_slice(), &[w.get(0, 0), w.get(0, 2), w.get(2, 0), w.get(2, 2)]);
        assert_eq!(w.get(1, 1), 11.0);
        assert!(minor(&w, &[3]).is_err());
    }

    #[test]
    fn dump_round_trip() {
        let x = sample_entries(&WignerSpec::new(6, EntryLaw::Gaussian, 77).unwrap()).unwrap();
        let w = assemble(&x);
        let mut buf = Vec::new();
        w.write_dump(&mut buf).unwrap();
        assert!(buf.starts_with(b"n=6\n"));
        let back = SymmetricMatrix::read_dump(&buf[..]).unwrap();
        assert_eq!(back, w);
        assert!(SymmetricMatrix::read_dump(&b"n=2\n1 2\n3 4\n"[..]).is_err());
    }
}
