mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use semicircle_core::ensemble::{assemble, sample_entries, standardize_pipeline, WignerSpec};
use semicircle_core::harness::{
    fit_exponent, run_sweeps, sample_spectra, summarize_stieltjes, write_csv_table, write_json, write_records,
    ExperimentConfig, OutputFormat, ReplicateRule,
};
use semicircle_core::region::{calibrate, profile_rows, smoothing_bound, BoundSettings};
use semicircle_core::resolvent::{identity_grid, identity_report, IdentityReport};
use semicircle_core::semicircle::{smoothing_params, stieltjes_at};
use semicircle_core::spectral::{eigenvalues, mean_esd, Esd};
use semicircle_core::{Complex64, Error};

use crate::config::{resolve, CommonArgs, Resolved};

/// Largest dimension the identity suite accepts; every row needs its own dense minor solve.
const VERIFY_MAX_N: usize = 64;
const VERIFY_DEFAULT_N: [usize; 4] = [4, 8, 16, 32];
const VERIFY_DEFAULT_SEEDS: usize = 100;
const BOUND_DEFAULT_REPLICATES: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "semilab", version, about = "Wigner-matrix spectral experiments")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one matrix at the first dimension and print its eigenvalues.
    Sample {
        /// Also write the matrix in text form.
        #[arg(long)]
        matrix_out: Option<std::path::PathBuf>,
    },
    /// Run the resolvent identity suite and inequality battery.
    Verify,
    /// Kolmogorov distance of the mean ESD for every dimension.
    SweepRate,
    /// Mean Stieltjes transform and envelope ratio over the spectral window grid.
    SweepStieltjes,
    /// Evaluate the contour smoothing bound for the mean ESD at the first dimension.
    Bound {
        /// Use the semicircle law shifted by this amount instead of a sampled ESD.
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<f64>,
        /// Write the vertical-integral profile as CSV.
        #[arg(long)]
        profile_out: Option<std::path::PathBuf>,
        /// Per-segment absolute quadrature tolerance.
        #[arg(long, default_value_t = semicircle_core::region::DEFAULT_QUADRATURE_TOLERANCE)]
        tolerance: f64,
    },
}

enum Failure {
    Identity(Vec<String>),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Other(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli.common).map_err(Failure::from).and_then(|r| run(cli.command, r));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Identity(names)) => {
            eprintln!("semilab: identity suite failed: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(Failure::Other(e)) => {
            eprintln!("semilab: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, resolved: Resolved) -> Result<(), Failure> {
    match command {
        Command::Sample { matrix_out } => sample(&resolved.experiment, matrix_out.as_deref()),
        Command::Verify => verify(resolved),
        Command::SweepRate => sweep_rate(&resolved.experiment),
        Command::SweepStieltjes => sweep_stieltjes(&resolved.experiment),
        Command::Bound {
            shift,
            profile_out,
            tolerance,
        } => bound(resolved, shift, profile_out.as_deref(), tolerance),
    }
    .map_err(Failure::from)
    .and_then(|outcome| match outcome {
        Some(names) => Err(Failure::Identity(names)),
        None => Ok(()),
    })
}

/// Output sink: the configured file, or standard output.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Error> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| io_error(p, source))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(|source| io_error(p, source))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|source| io_error(Path::new("<stdout>"), source))
        }
    }
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

type Outcome = Result<Option<Vec<String>>, Error>;

fn sample(cfg: &ExperimentConfig, matrix_out: Option<&Path>) -> Outcome {
    cfg.validate()?;
    let n = cfg.n_list[0];
    let spec = WignerSpec::new(n, cfg.ensemble.clone(), cfg.seed)?;
    let x = sample_entries(&spec)?;
    let w = match cfg.pipeline_d0 {
        Some(d0) => assemble(&standardize_pipeline(&x, &cfg.ensemble, d0)?.breve),
        None => assemble(&x),
    };
    let spectrum = eigenvalues(&w)?;
    if let Some(path) = matrix_out {
        with_output(Some(path), |out| w.write_dump(out))?;
    }
    with_output(cfg.out.as_deref(), |out| spectrum.write_dump(out))?;
    eprintln!(
        "n = {n}, law = {}, seed = {}, delta* = {:.6}",
        cfg.ensemble,
        cfg.seed,
        Esd::of_spectrum(&spectrum).kolmogorov_distance()
    );
    Ok(None)
}

fn verify(resolved: Resolved) -> Outcome {
    let mut cfg = resolved.experiment;
    if !resolved.n_list_given {
        cfg.n_list = VERIFY_DEFAULT_N.to_vec();
    }
    if !resolved.replicates_given {
        cfg.replicates = ReplicateRule::Fixed(VERIFY_DEFAULT_SEEDS);
    }
    cfg.validate()?;
    if let Some(&n) = cfg.n_list.iter().find(|&&n| n < 2 || n > VERIFY_MAX_N) {
        return Err(Error::InvalidArgument(format!(
            "identity suite dimensions must lie in [2, {VERIFY_MAX_N}], got {n}"
        )));
    }
    let grid = identity_grid();
    let mut report = IdentityReport::new();
    for (index, &n) in cfg.n_list.iter().enumerate() {
        for r in 0..cfg.replicates_for(index) {
            let seed = cfg.replicate_seed(n, r);
            let w = cfg.sample_matrix(n, seed)?;
            report.merge(&identity_report(&w, &grid, seed, cfg.a0)?);
        }
    }
    with_output(cfg.out.as_deref(), |out| report.write_table(out))?;
    eprintln!(
        "max identity residual {:.3e}, {} violations",
        report.max_identity_residual(),
        report.total_violations()
    );
    let failures: Vec<String> = report.failures().into_iter().map(String::from).collect();
    Ok((!failures.is_empty()).then_some(failures))
}

fn sweep_rate(cfg: &ExperimentConfig) -> Outcome {
    let records: Vec<_> = run_sweeps(cfg, false)?.into_iter().map(|r| r.rate).collect();
    with_output(cfg.out.as_deref(), |out| write_records(&records, cfg.format, out))?;
    if let Ok(fit) = fit_exponent(&records) {
        eprintln!("log-log slope {:.4}, intercept {:.4}, r2 {:.4}", fit.slope, fit.intercept, fit.r2);
    }
    Ok(None)
}

fn sweep_stieltjes(cfg: &ExperimentConfig) -> Outcome {
    let records: Vec<_> = run_sweeps(cfg, true)?.into_iter().flat_map(|r| r.stieltjes).collect();
    with_output(cfg.out.as_deref(), |out| match cfg.format {
        OutputFormat::Csv => write_csv_table(&records, out),
        OutputFormat::Json => write_json(&records, out),
    })?;
    for s in summarize_stieltjes(&records) {
        eprintln!(
            "n = {}: max envelope ratio {:.4} at u = {:.4}, v = {:.3e} over {} points",
            s.n, s.max_ratio, s.argmax_u, s.argmax_v, s.points
        );
    }
    Ok(None)
}

fn bound(resolved: Resolved, shift: Option<f64>, profile_out: Option<&Path>, tolerance: f64) -> Outcome {
    let mut cfg = resolved.experiment;
    if !resolved.replicates_given {
        cfg.replicates = ReplicateRule::Fixed(BOUND_DEFAULT_REPLICATES);
    }
    cfg.n_list.truncate(1);
    cfg.validate()?;
    let n = cfg.n_list[0];
    let params = smoothing_params(n, cfg.a0)?;
    let settings = BoundSettings {
        c1: resolved.constants.c1.unwrap_or(1.0),
        c2: resolved.constants.c2.unwrap_or(1.0),
        tolerance,
        ..BoundSettings::default()
    };
    let (breakdown, delta) = match shift {
        Some(d) => {
            let sf = |z: Complex64| stieltjes_at(z - d);
            (smoothing_bound(&sf, &params, &settings)?, None)
        }
        None => {
            let spectra = sample_spectra(&cfg, n, cfg.replicates_for(0), &|n, seed| cfg.sample_matrix(n, seed))?;
            let esd = mean_esd(&spectra)?;
            let sf = |z: Complex64| esd.stieltjes(z);
            (smoothing_bound(&sf, &params, &settings)?, Some(esd.kolmogorov_distance()))
        }
    };
    with_output(cfg.out.as_deref(), |out| {
        writeln!(out, "n = {n}")?;
        for (key, value) in breakdown.to_key_values() {
            writeln!(out, "{key} = {value:?}")?;
        }
        if let Some(delta) = delta {
            writeln!(out, "delta_mean_esd = {delta:?}")?;
            writeln!(out, "calibrated_c = {:?}", calibrate(delta, &breakdown))?;
        }
        Ok(())
    })?;
    if let Some(path) = profile_out {
        with_output(Some(path), |out| write_csv_table(&profile_rows(&breakdown), out))?;
    }
    Ok(None)
}
