use std::path::{Path, PathBuf};

use clap::Args;
use mutrb_core::experiments::{GenerationMode, SeedConfig, WalkConfig, DEFAULT_EXHAUSTIVE_CAP};
use mutrb_core::harness::Comparator;
use mutrb_core::minilang::Limits;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}: {1}")]
    Read(String, std::io::Error),
    #[error("{0}: {1}")]
    Parse(String, toml::de::Error),
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("`{0}` must be at least 1")]
    NotPositive(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// Values accepted from a TOML file. Every key is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub target: Option<PathBuf>,
    pub suite: Option<PathBuf>,
    pub external: Option<PathBuf>,
    pub comparator: Option<Comparator>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
    pub per_op_samples: Option<usize>,
    pub exhaustive_cap: Option<usize>,
    #[serde(default)]
    pub limits: LimitsFile,
    #[serde(default)]
    pub walk: WalkFile,
    #[serde(default)]
    pub repair: RepairFile,
    #[serde(default)]
    pub sweep: SweepFile,
    pub seeding: Option<SeedConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsFile {
    pub max_steps: Option<u64>,
    pub max_output: Option<usize>,
    pub max_input_reads: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkFile {
    pub population: Option<usize>,
    pub steps: Option<usize>,
    pub size_cap: Option<bool>,
    pub robustness_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairFile {
    pub n_defects: Option<usize>,
    pub n_variants: Option<usize>,
    pub mode: Option<GenerationMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub n_values: Option<Vec<usize>>,
    pub n_variants: Option<usize>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// TOML file with default values for any of the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Program to mutate (`.mini` source or `.lin` listing).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Directory of `<name>.in` / `<name>.out` pairs.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// External target descriptor, used instead of `--suite`.
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// exact, whitespace-insensitive or crash-only.
    #[arg(long)]
    pub comparator: Option<Comparator>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Report path; defaults to `<command>.json`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub per_op_samples: Option<usize>,
    #[arg(long)]
    pub exhaustive_cap: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub max_output: Option<usize>,
    #[arg(long)]
    pub max_input_reads: Option<u64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub size_cap: Option<bool>,
    #[arg(long)]
    pub robustness_samples: Option<usize>,
    #[arg(long)]
    pub n_defects: Option<usize>,
    /// Variants to generate (repair) or to select per point (sweep).
    #[arg(long)]
    pub n_variants: Option<usize>,
    /// sampled or exhaustive-first-order.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<GenerationMode>,
    /// Comma-separated defect counts for the sweep.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
}

fn parse_mode(s: &str) -> Result<GenerationMode, String> {
    match s {
        "sampled" => Ok(GenerationMode::Sampled),
        "exhaustive-first-order" => Ok(GenerationMode::ExhaustiveFirstOrder),
        _ => Err(format!("unknown mode `{s}`")),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkSettings {
    pub population: usize,
    pub steps: usize,
    pub size_cap: bool,
    pub robustness_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepairSettings {
    pub n_defects: usize,
    pub n_variants: usize,
    pub mode: GenerationMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSettings {
    pub n_values: Vec<usize>,
    pub n_variants: usize,
}

/// Fully resolved settings. `jobs` and `output` do not change a report's
/// content and are left out of its digest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    pub target: PathBuf,
    pub suite: Option<PathBuf>,
    pub external: Option<PathBuf>,
    pub comparator: Comparator,
    pub seed: u64,
    pub limits: Limits,
    pub per_op_samples: usize,
    pub exhaustive_cap: usize,
    pub walk: WalkSettings,
    pub repair: RepairSettings,
    pub sweep: SweepSettings,
    pub seeding: SeedConfig,
    #[serde(skip)]
    pub jobs: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

fn positive(v: usize, field: &'static str) -> Result<usize, ConfigError> {
    if v == 0 {
        Err(ConfigError::NotPositive(field))
    } else {
        Ok(v)
    }
}

pub fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.display().to_string(), e))?;
    toml::from_str(&text).map_err(|e| ConfigError::Parse(path.display().to_string(), e))
}

pub fn load_config(flags: &Flags) -> Result<Config, ConfigError> {
    let file = match &flags.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    resolve(flags.clone(), file)
}

pub fn resolve(f: Flags, file: FileConfig) -> Result<Config, ConfigError> {
    let d = Limits::default();
    let limits = Limits {
        max_steps: f.max_steps.or(file.limits.max_steps).unwrap_or(d.max_steps),
        max_output: f.max_output.or(file.limits.max_output).unwrap_or(d.max_output),
        max_input_reads: f.max_input_reads.or(file.limits.max_input_reads).unwrap_or(d.max_input_reads),
    };
    limits
        .validate()
        .map_err(|e| ConfigError::Invalid(format!("`limits.{}` must be at least 1", e.0)))?;

    let wd = WalkConfig::default();
    let walk = WalkSettings {
        population: positive(f.population.or(file.walk.population).unwrap_or(wd.population), "walk.population")?,
        steps: f.steps.or(file.walk.steps).unwrap_or(wd.steps),
        size_cap: f.size_cap.or(file.walk.size_cap).unwrap_or(wd.size_cap),
        robustness_samples: positive(
            f.robustness_samples
                .or(file.walk.robustness_samples)
                .unwrap_or(wd.robustness_samples),
            "walk.robustness_samples",
        )?,
    };
    let repair = RepairSettings {
        n_defects: positive(f.n_defects.or(file.repair.n_defects).unwrap_or(5), "repair.n_defects")?,
        n_variants: positive(f.n_variants.or(file.repair.n_variants).unwrap_or(5000), "repair.n_variants")?,
        mode: f.mode.or(file.repair.mode).unwrap_or_default(),
    };
    let n_values = f
        .n_values
        .clone()
        .or(file.sweep.n_values)
        .unwrap_or_else(|| (1..=8).collect());
    if n_values.is_empty() {
        return Err(ConfigError::Invalid("`sweep.n_values` must not be empty".into()));
    }
    for &n in &n_values {
        positive(n, "sweep.n_values")?;
    }
    let sweep = SweepSettings {
        n_values,
        n_variants: positive(f.n_variants.or(file.sweep.n_variants).unwrap_or(200), "sweep.n_variants")?,
    };

    let suite = f.suite.or(file.suite);
    let external = f.external.or(file.external);
    match (&suite, &external) {
        (None, None) => return Err(ConfigError::Missing("suite")),
        (Some(_), Some(_)) => return Err(ConfigError::Invalid("give either `suite` or `external`, not both".into())),
        _ => {}
    }
    let seeding = file.seeding.unwrap_or_default();
    positive(seeding.attempts_per_defect, "seeding.attempts_per_defect")?;
    positive(seeding.max_input_len, "seeding.max_input_len")?;
    if seeding.min_value > seeding.max_value {
        return Err(ConfigError::Invalid("`seeding.min_value` exceeds `seeding.max_value`".into()));
    }
    if seeding.class_weights.iter().any(|w| !w.is_finite() || *w < 0.0)
        || seeding.class_weights.iter().sum::<f64>() <= 0.0
    {
        return Err(ConfigError::Invalid(
            "`seeding.class_weights` must be non-negative with a positive sum".into(),
        ));
    }

    Ok(Config {
        target: f.target.or(file.target).ok_or(ConfigError::Missing("target"))?,
        suite,
        external,
        comparator: f.comparator.or(file.comparator).unwrap_or(Comparator::Exact),
        seed: f.seed.or(file.seed).ok_or(ConfigError::Missing("seed"))?,
        limits,
        per_op_samples: positive(
            f.per_op_samples.or(file.per_op_samples).unwrap_or(200),
            "per_op_samples",
        )?,
        exhaustive_cap: positive(
            f.exhaustive_cap.or(file.exhaustive_cap).unwrap_or(DEFAULT_EXHAUSTIVE_CAP),
            "exhaustive_cap",
        )?,
        walk,
        repair,
        sweep,
        seeding,
        jobs: positive(f.jobs.or(file.jobs).unwrap_or(1), "jobs")?,
        output: f.output.or(file.output),
    })
}
