//! Monte Carlo experiments: Kolmogorov-rate sweeps over `n`, Stieltjes
//! envelope sweeps over the spectral window, exponent fitting and output.
//!
//! Every replicate draws from its own seed `derive_seed(seed, [n, r])`, so a
//! sweep produces the same numbers for any thread budget and any single
//! replicate can be replayed in isolation.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ensemble::{assemble, sample_entries, standardize_pipeline, EntryLaw, SymmetricMatrix, WignerSpec};
use crate::region::{envelope, region_grid, RegionSpec};
use crate::resolvent::stieltjes_of_spectrum;
use crate::rng::{aux_stream, derive_seed};
use crate::semicircle::{cdf_unchecked, UpperHalfPoint};
use crate::spectral::{eigenvalues, mean_esd, Esd, Spectrum};
use crate::{Complex64, Error, Result};

/// Exact CSV header of rate-sweep output.
pub const RATE_CSV_HEADER: &str = "n,replicates,delta_n,delta_star_mean,bootstrap_se,n_times_delta,wall_seconds,seed";
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Total work target of the default replicate rule: `replicates * n`.
pub const DEFAULT_WORK: usize = 1 << 18;
pub const MIN_DEFAULT_REPLICATES: usize = 32;
const BOOTSTRAP_TAG: u64 = 0xB007;

/// Replicates per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReplicateRule {
    /// `max(32, 2^18 / n)`.
    Auto(AutoKeyword),
    Fixed(usize),
    /// One count per entry of the dimension list.
    PerN(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl Default for ReplicateRule {
    fn default() -> Self {
        ReplicateRule::Auto(AutoKeyword::Auto)
    }
}

impl FromStr for ReplicateRule {
    type Err = Error;

    /// `auto`, a single count, or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(ReplicateRule::default());
        }
        let counts = parse_usize_list(s)?;
        Ok(match counts.as_slice() {
            [one] => ReplicateRule::Fixed(*one),
            _ => ReplicateRule::PerN(counts),
        })
    }
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::invalid(format!("'{t}' is not a nonnegative integer: {e}")))
        })
        .collect()
}

pub fn default_replicates(n: usize) -> usize {
    MIN_DEFAULT_REPLICATES.max(DEFAULT_WORK / n.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!("unknown output format '{other}'"))),
        }
    }
}

/// One experiment. Field names double as the keys of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub replicates: ReplicateRule,
    #[serde(serialize_with = "law_to_string", deserialize_with = "law_from_string")]
    pub ensemble: EntryLaw,
    /// Truncation constant of the standardization pipeline; off when absent.
    pub pipeline_d0: Option<f64>,
    pub a0: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Record wall-clock seconds; off keeps output byte-reproducible.
    pub timing: bool,
    /// Region grid size for envelope sweeps.
    pub u_count: usize,
    pub v_count: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_list: vec![128, 256, 512, 1024],
            replicates: ReplicateRule::default(),
            ensemble: EntryLaw::Gaussian,
            pipeline_d0: None,
            a0: 1.0,
            seed: 0,
            out: None,
            format: OutputFormat::Csv,
            threads: 0,
            timing: false,
            u_count: 33,
            v_count: 12,
        }
    }
}

fn law_to_string<S: Serializer>(law: &EntryLaw, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(law)
}

fn law_from_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<EntryLaw, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("n_list is empty"));
        }
        if self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "n_list must be positive and strictly increasing, got {:?}",
                self.n_list
            )));
        }
        match &self.replicates {
            ReplicateRule::Fixed(0) => return Err(Error::invalid("replicates must be at least 1")),
            ReplicateRule::PerN(v) if v.len() != self.n_list.len() => {
                return Err(Error::invalid(format!(
                    "{} replicate counts for {} dimensions",
                    v.len(),
                    self.n_list.len()
                )))
            }
            ReplicateRule::PerN(v) if v.contains(&0) => return Err(Error::invalid("replicates must be at least 1")),
            _ => {}
        }
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return Err(Error::invalid(format!("A0 must be positive, got {}", self.a0)));
        }
        if let Some(d0) = self.pipeline_d0 {
            if !(d0 > 0.0 && d0.is_finite()) {
                return Err(Error::invalid(format!("pipeline_d0 must be positive, got {d0}")));
            }
        }
        if self.u_count == 0 || self.v_count == 0 {
            return Err(Error::invalid("region grid sizes must be positive"));
        }
        self.ensemble.validate()
    }

    pub fn replicates_for(&self, index: usize) -> usize {
        match &self.replicates {
            ReplicateRule::Auto(_) => default_replicates(self.n_list[index]),
            ReplicateRule::Fixed(r) => *r,
            ReplicateRule::PerN(v) => v[index],
        }
    }

    /// Seed of replicate `r` at dimension `n`.
    pub fn replicate_seed(&self, n: usize, r: usize) -> u64 {
        derive_seed(self.seed, &[n as u64, r as u64])
    }

    /// `W` for one replicate, standardized when the pipeline is on.
    pub fn sample_matrix(&self, n: usize, seed: u64) -> Result<SymmetricMatrix> {
        let spec = WignerSpec::new(n, self.ensemble.clone(), seed)?;
        let x = sample_entries(&spec)?;
        match self.pipeline_d0 {
            Some(d0) => Ok(assemble(&standardize_pipeline(&x, &self.ensemble, d0)?.breve)),
            None => Ok(assemble(&x)),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))
    }
}

/// One `(n, ensemble, replicates)` outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSweepRecord {
    pub n: usize,
    pub replicates: usize,
    /// Kolmogorov distance of the pooled (mean) ESD.
    pub delta_n: f64,
    /// Mean over replicates of each replicate's own Kolmogorov distance.
    pub delta_star_mean: f64,
    pub bootstrap_se: f64,
    pub n_times_delta: f64,
    pub wall_seconds: f64,
    pub seed: u64,
}

/// Envelope data at one point of the region grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesRecord {
    pub n: usize,
    pub u: f64,
    pub v: f64,
    pub mean_m_re: f64,
    pub mean_m_im: f64,
    pub s_re: f64,
    pub s_im: f64,
    pub lambda_abs: f64,
    pub envelope: f64,
    pub envelope_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StieltjesSummary {
    pub n: usize,
    pub points: usize,
    pub max_ratio: f64,
    pub argmax_u: f64,
    pub argmax_v: f64,
}

/// Per-dimension output of [`run_sweeps`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rate: RateSweepRecord,
    /// Empty when the region is not defined at this `n` (trim >= 1/2).
    pub stieltjes: Vec<StieltjesRecord>,
}

/// Draws the replicate spectra at dimension `n` with `sample(n, seed)`.
pub fn sample_spectra<S>(cfg: &ExperimentConfig, n: usize, replicates: usize, sample: &S) -> Result<Vec<Spectrum>>
where
    S: Fn(usize, u64) -> Result<SymmetricMatrix> + Sync,
{
    let pool = cfg.pool()?;
    pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| {
                let seed = cfg.replicate_seed(n, r);
                sample(n, seed)
                    .and_then(|w| eigenvalues(&w))
                    .map_err(|e| Error::Replicate {
                        n,
                        replicate: r,
                        seed,
                        source: Box::new(e),
                    })
            })
            .collect()
    })
}

/// Kolmogorov-rate sweep over the configured Wigner ensemble.
pub fn run_rate_sweep(cfg: &ExperimentConfig) -> Result<Vec<RateSweepRecord>> {
    run_rate_sweep_with(cfg, &|n, seed| cfg.sample_matrix(n, seed))
}

/// Rate sweep with a custom matrix source `sample(n, seed)`.
pub fn run_rate_sweep_with<S>(cfg: &ExperimentConfig, sample: &S) -> Result<Vec<RateSweepRecord>>
where
    S: Fn(usize, u64) -> Result<SymmetricMatrix> + Sync,
{
    Ok(run_sweeps_with(cfg, false, sample)?.into_iter().map(|r| r.rate).collect())
}

/// Envelope sweep over the region grid at every admissible `n`.
pub fn run_stieltjes_sweep(cfg: &ExperimentConfig) -> Result<Vec<StieltjesRecord>> {
    Ok(run_sweeps(cfg, true)?.into_iter().flat_map(|r| r.stieltjes).collect())
}

/// Rate records and, with `envelope_sweep`, envelope records from one set
/// of replicate spectra per `n`.
pub fn run_sweeps(cfg: &ExperimentConfig, envelope_sweep: bool) -> Result<Vec<SweepResult>> {
    run_sweeps_with(cfg, envelope_sweep, &|n, seed| cfg.sample_matrix(n, seed))
}

pub fn run_sweeps_with<S>(cfg: &ExperimentConfig, envelope_sweep: bool, sample: &S) -> Result<Vec<SweepResult>>
where
    S: Fn(usize, u64) -> Result<SymmetricMatrix> + Sync,
{
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.n_list.len());
    for (index, &n) in cfg.n_list.iter().enumerate() {
        let replicates = cfg.replicates_for(index);
        let start = Instant::now();
        let spectra = sample_spectra(cfg, n, replicates, sample)?;
        let mut rate = rate_record(cfg, n, &spectra)?;
        let stieltjes = match (envelope_sweep, RegionSpec::for_dimension(n, cfg.a0, cfg.u_count, cfg.v_count)) {
            (true, Ok(region)) => stieltjes_records(cfg, &spectra, &region_grid(&region))?,
            _ => Vec::new(),
        };
        if cfg.timing {
            rate.wall_seconds = start.elapsed().as_secs_f64();
        }
        out.push(SweepResult { rate, stieltjes });
    }
    Ok(out)
}

fn rate_record(cfg: &ExperimentConfig, n: usize, spectra: &[Spectrum]) -> Result<RateSweepRecord> {
    let pooled = mean_esd(spectra)?;
    let delta_n = pooled.kolmogorov_distance();
    let stars: Vec<f64> = spectra.iter().map(|s| Esd::of_spectrum(s).kolmogorov_distance()).collect();
    let delta_star_mean = stars.iter().sum::<f64>() / stars.len() as f64;
    // sup of the mean ESD error never exceeds the mean of the sups
    if delta_n > delta_star_mean + 1e-12 {
        return Err(Error::invalid(format!(
            "pooled distance {delta_n} exceeds mean replicate distance {delta_star_mean} at n = {n}"
        )));
    }
    let bootstrap_se = bootstrap_se(spectra, derive_seed(cfg.seed, &[n as u64]), BOOTSTRAP_RESAMPLES);
    Ok(RateSweepRecord {
        n,
        replicates: spectra.len(),
        delta_n,
        delta_star_mean,
        bootstrap_se,
        n_times_delta: n as f64 * delta_n,
        wall_seconds: 0.0,
        seed: cfg.seed,
    })
}

/// Standard error of the pooled Kolmogorov distance under resampling of
/// replicates with replacement.
///
/// The pooled atoms are sorted once; a resample only changes the mass on
/// each replicate's atoms, so each bootstrap distance is one weighted pass.
pub fn bootstrap_se(spectra: &[Spectrum], seed: u64, resamples: usize) -> f64 {
    let reps = spectra.len();
    if reps < 2 || resamples < 2 {
        return 0.0;
    }
    let n = spectra[0].len();
    let mut atoms: Vec<(f64, usize)> = spectra
        .iter()
        .enumerate()
        .flat_map(|(r, s)| s.values().iter().map(move |&x| (x, r)))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let g: Vec<f64> = atoms.iter().map(|&(x, _)| cdf_unchecked(x)).collect();
    let unit = 1.0 / (n * reps) as f64;

    let mut rng = aux_stream(seed, BOOTSTRAP_TAG);
    let mut counts = vec![0usize; reps];
    let estimates: Vec<f64> = (0..resamples)
        .map(|_| {
            counts.iter_mut().for_each(|c| *c = 0);
            for _ in 0..reps {
                counts[rng.random_range(0..reps)] += 1;
            }
            let mut below = 0usize;
            let mut sup = 0.0_f64;
            for (&(_, r), &gx) in atoms.iter().zip(&g) {
                let above = below + counts[r];
                sup = sup.max((below as f64 * unit - gx).abs()).max((above as f64 * unit - gx).abs());
                below = above;
            }
            sup.max((below as f64 * unit - 1.0).abs()).min(1.0)
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / resamples as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    var.sqrt()
}

fn stieltjes_records(cfg: &ExperimentConfig, spectra: &[Spectrum], grid: &[UpperHalfPoint]) -> Result<Vec<StieltjesRecord>> {
    let n = spectra[0].len();
    let pool = cfg.pool()?;
    Ok(pool.install(|| {
        grid.par_iter()
            .map(|&z| {
                let mut m = Complex64::new(0.0, 0.0);
                let mut s = Complex64::new(0.0, 0.0);
                for spectrum in spectra {
                    let sample = stieltjes_of_spectrum(spectrum, z);
                    m += sample.m_n;
                    s = sample.s;
                }
                m /= spectra.len() as f64;
                let lambda = m - s;
                let env = envelope(z, n);
                StieltjesRecord {
                    n,
                    u: z.u(),
                    v: z.v(),
                    mean_m_re: m.re,
                    mean_m_im: m.im,
                    s_re: s.re,
                    s_im: s.im,
                    lambda_abs: lambda.norm(),
                    envelope: env,
                    envelope_ratio: lambda.norm() / env,
                }
            })
            .collect()
    }))
}

/// Largest envelope ratio per dimension, in order of first appearance.
pub fn summarize_stieltjes(records: &[StieltjesRecord]) -> Vec<StieltjesSummary> {
    let mut out: Vec<StieltjesSummary> = Vec::new();
    for r in records {
        match out.iter_mut().find(|s| s.n == r.n) {
            Some(s) => {
                s.points += 1;
                if r.envelope_ratio > s.max_ratio {
                    s.max_ratio = r.envelope_ratio;
                    s.argmax_u = r.u;
                    s.argmax_v = r.v;
                }
            }
            None => out.push(StieltjesSummary {
                n: r.n,
                points: 1,
                max_ratio: r.envelope_ratio,
                argmax_u: r.u,
                argmax_v: r.v,
            }),
        }
    }
    out
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits `log delta_n = intercept + slope log n`.
pub fn fit_exponent(records: &[RateSweepRecord]) -> Result<ExponentFit> {
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.delta_n)).collect();
    fit_log_log(&points)
}

pub fn fit_log_log(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!("exponent fit needs at least 3 points, got {}", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::invalid(format!("exponent fit needs positive values, got ({x}, {y})")));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("exponent fit needs distinct dimensions"));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = points.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(ExponentFit { slope, intercept, r2 })
}

/// `max(n delta_n) / min(n delta_n)` over a sweep.
pub fn band_ratio(records: &[RateSweepRecord]) -> f64 {
    let (lo, hi) = records
        .iter()
        .map(|r| r.n_times_delta)
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi / lo
}

/// Writes rate records as CSV (fixed header, shortest round-trip decimals)
/// or as a JSON array.
pub fn emit(records: &[RateSweepRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, format, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn write_records<W: Write>(records: &[RateSweepRecord], format: OutputFormat, mut w: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "{RATE_CSV_HEADER}")?;
            write_csv_rows(records, w)
        }
        OutputFormat::Json => write_json(records, w),
    }
}

/// Rows without a header; `csv` serializes floats in shortest round-trip form.
pub fn write_csv_rows<T: Serialize, W: Write>(rows: &[T], w: W) -> std::io::Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in rows {
        writer.serialize(row).map_err(std::io::Error::other)?;
    }
    writer.flush()
}

/// Header row plus rows, with the header taken from the serialized field names.
pub fn write_csv_table<T: Serialize, W: Write>(rows: &[T], w: W) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row).map_err(std::io::Error::other)?;
    }
    writer.flush()
}

/// Pretty-printed JSON array.
pub fn write_json<T: Serialize, W: Write>(rows: &[T], mut w: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, rows)?;
    writeln!(w)?;
    w.flush()
}

pub fn read_records(format: OutputFormat, path: &Path) -> Result<Vec<RateSweepRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    match format {
        OutputFormat::Csv => {
            let mut reader = csv::Reader::from_reader(BufReader::new(file));
            let header = reader.headers().map_err(|e| parse(e.to_string()))?;
            if header.iter().collect::<Vec<_>>().join(",") != RATE_CSV_HEADER {
                return Err(parse(format!("unexpected header '{}'", header.iter().collect::<Vec<_>>().join(","))));
            }
            reader
                .deserialize()
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse(e.to_string()))
        }
        OutputFormat::Json => serde_json::from_reader(BufReader::new(file)).map_err(|e| parse(e.to_string())),
    }
}
