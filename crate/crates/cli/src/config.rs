//! Layered configuration: built-in defaults, then a TOML file, then flags
//! and `SEMILAB_*` environment variables.

use std::path::{Path, PathBuf};

use clap::Args;
use semicircle_core::ensemble::EntryLaw;
use semicircle_core::harness::{parse_usize_list, ExperimentConfig, OutputFormat, ReplicateRule};
use semicircle_core::Error;

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with experiment settings; flags override it.
    #[arg(long, global = true, env = "SEMILAB_CONFIG")]
    pub config: Option<PathBuf>,

    /// Comma-separated, strictly increasing matrix dimensions.
    #[arg(long, global = true, env = "SEMILAB_N_LIST", value_parser = parse_n_list)]
    pub n_list: Option<NList>,

    /// `auto`, a count, or one count per dimension.
    #[arg(long, global = true, env = "SEMILAB_REPLICATES")]
    pub replicates: Option<ReplicateRule>,

    /// Entry law: gaussian, rademacher, uniform, or discrete:x@p,...
    #[arg(long, global = true, env = "SEMILAB_ENSEMBLE")]
    pub ensemble: Option<EntryLaw>,

    /// Truncate at D0 n^{1/4}, recenter and rescale before assembling.
    #[arg(long, global = true, env = "SEMILAB_PIPELINE_D0")]
    pub pipeline_d0: Option<f64>,

    #[arg(long, global = true, env = "SEMILAB_SEED")]
    pub seed: Option<u64>,

    #[arg(long, global = true, env = "SEMILAB_A0")]
    pub a0: Option<f64>,

    #[arg(long, global = true, env = "SEMILAB_C1")]
    pub c1: Option<f64>,

    #[arg(long, global = true, env = "SEMILAB_C2")]
    pub c2: Option<f64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true, env = "SEMILAB_OUT")]
    pub out: Option<PathBuf>,

    /// csv or json.
    #[arg(long, global = true, env = "SEMILAB_FORMAT")]
    pub format: Option<OutputFormat>,

    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "SEMILAB_THREADS")]
    pub threads: Option<usize>,

    /// Record wall-clock seconds in sweep output.
    #[arg(long, global = true, env = "SEMILAB_TIMING")]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NList(pub Vec<usize>);

fn parse_n_list(s: &str) -> Result<NList, Error> {
    parse_usize_list(s).map(NList)
}

/// Keys that the bound command reads from the file beyond [`ExperimentConfig`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundConstants {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

/// Settled configuration and whether the user chose the dimensions and
/// replicate counts, so commands can substitute their own defaults.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub constants: BoundConstants,
    pub n_list_given: bool,
    pub replicates_given: bool,
}

pub fn resolve(args: &CommonArgs) -> Result<Resolved, Error> {
    let (mut table, source) = match &args.config {
        Some(path) => (read_table(path)?, Some(path.as_path())),
        None => (toml::Table::new(), None),
    };
    let take_f64 = |table: &mut toml::Table, key: &str| -> Result<Option<f64>, Error> {
        match table.remove(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(x)),
            Some(toml::Value::Integer(x)) => Ok(Some(x as f64)),
            Some(other) => Err(parse_error(source, format!("{key} must be a number, got {other}"))),
        }
    };
    let constants = BoundConstants {
        c1: args.c1.or(take_f64(&mut table, "c1")?),
        c2: args.c2.or(take_f64(&mut table, "c2")?),
    };
    let n_list_given = args.n_list.is_some() || table.contains_key("n_list");
    let replicates_given = args.replicates.is_some() || table.contains_key("replicates");
    let mut experiment: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| parse_error(source, e.message().to_string()))?;

    if let Some(NList(v)) = &args.n_list {
        experiment.n_list = v.clone();
    }
    if let Some(r) = &args.replicates {
        experiment.replicates = r.clone();
    }
    if let Some(law) = &args.ensemble {
        experiment.ensemble = law.clone();
    }
    if args.pipeline_d0.is_some() {
        experiment.pipeline_d0 = args.pipeline_d0;
    }
    if let Some(seed) = args.seed {
        experiment.seed = seed;
    }
    if let Some(a0) = args.a0 {
        experiment.a0 = a0;
    }
    if args.out.is_some() {
        experiment.out = args.out.clone();
    }
    if let Some(format) = args.format {
        experiment.format = format;
    }
    if let Some(threads) = args.threads {
        experiment.threads = threads;
    }
    experiment.timing |= args.timing;
    Ok(Resolved {
        experiment,
        constants,
        n_list_given,
        replicates_given,
    })
}

fn read_table(path: &Path) -> Result<toml::Table, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.parse::<toml::Table>()
        .map_err(|e| parse_error(Some(path), e.message().to_string()))
}

fn parse_error(path: Option<&Path>, message: String) -> Error {
    Error::Parse {
        path: path.map_or_else(|| PathBuf::from("<config>"), Path::to_path_buf),
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "n_list = [16, 32]\nreplicates = 3\nensemble = \"rademacher\"\nseed = 9\nc1 = 2\nformat = \"json\"\n",
        )
        .unwrap();
        let args = CommonArgs {
            config: Some(path),
            seed: Some(11),
            ..CommonArgs::default()
        };
        let r = resolve(&args).unwrap();
        assert_eq!(r.experiment.n_list, vec![16, 32]);
        assert_eq!(r.experiment.replicates, ReplicateRule::Fixed(3));
        assert_eq!(r.experiment.ensemble, EntryLaw::Rademacher);
        assert_eq!(r.experiment.seed, 11);
        assert_eq!(r.experiment.format, OutputFormat::Json);
        assert_eq!(r.constants.c1, Some(2.0));
        assert!(r.n_list_given && r.replicates_given);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "n_lsit = [16]\n").unwrap();
        let err = resolve(&CommonArgs {
            config: Some(path),
            ..CommonArgs::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("bad.toml"));
    }

    #[test]
    fn auto_replicates_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("auto.toml");
        std::fs::write(&path, "replicates = \"auto\"\n").unwrap();
        let r = resolve(&CommonArgs {
            config: Some(path),
            ..CommonArgs::default()
        })
        .unwrap();
        assert_eq!(r.experiment.replicates, ReplicateRule::default());
        assert!(!r.n_list_given);
    }
}
