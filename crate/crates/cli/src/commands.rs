use std::path::{Path, PathBuf};

use clap::ValueEnum;
use mutrb_core::experiments::{
    estimate_mutrb, exhaustive_mutrb, neutral_walk, proactive_repair, seed_defects, seeded_bug_sweep,
    ExperimentError, WalkConfig, WalkResult,
};
use mutrb_core::genome::{Digest, Genome, TreeGenome};
use mutrb_core::harness::{Evaluator, ExternalTarget, HermeticEvaluator, TestSuite};
use mutrb_core::report::{format_float, to_canonical_json};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{Config, ConfigError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Measure,
    Exhaustive,
    Coverage,
    Walk,
    SeedBugs,
    Repair,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Measure => "measure",
            Command::Exhaustive => "exhaustive",
            Command::Coverage => "coverage",
            Command::Walk => "walk",
            Command::SeedBugs => "seed-bugs",
            Command::Repair => "repair",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Error)]
pub enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(ExperimentError),
    #[error("walk stalled at step {step} after {attempts} attempts")]
    Stalled { step: usize, attempts: usize },
    #[error("{0}: {1}")]
    Write(String, std::io::Error),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::NeedsTree(_) | ExperimentError::Config(_) => {
                Failure::Config(ConfigError::Invalid(e.to_string()))
            }
            e => Failure::Experiment(e),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Write(..) => 2,
            Failure::Experiment(ExperimentError::OriginalFails(_)) => 3,
            Failure::Experiment(_) | Failure::Stalled { .. } => 4,
        }
    }
}

/// Everything loaded from disk before an experiment runs.
pub struct Inputs {
    pub target: Genome,
    pub suite: Option<TestSuite>,
    pub evaluator: Box<dyn Evaluator>,
    pub target_digest: Digest,
    pub suite_digest: Digest,
}

fn invalid(msg: String) -> Failure {
    Failure::Config(ConfigError::Invalid(msg))
}

pub fn load_inputs(cfg: &Config) -> Result<Inputs, Failure> {
    let text = std::fs::read_to_string(&cfg.target)
        .map_err(|e| invalid(format!("target {}: {e}", cfg.target.display())))?;
    let target = Genome::parse_path_text(&cfg.target, &text)
        .map_err(|e| invalid(format!("target {}: {e}", cfg.target.display())))?;
    let target_digest = Digest::of(&text);
    if let Some(dir) = &cfg.suite {
        let suite = TestSuite::load_dir(dir, cfg.comparator).map_err(|e| invalid(format!("suite: {e}")))?;
        let suite_digest = Digest::of(&serde_json::to_string(&suite.cases).expect("cases serialize"));
        let evaluator = Box::new(HermeticEvaluator::new(suite.clone(), cfg.limits));
        return Ok(Inputs {
            target,
            suite: Some(suite),
            evaluator,
            target_digest,
            suite_digest,
        });
    }
    let path = cfg.external.as_ref().expect("suite or external is set");
    let descriptor = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let ext = ExternalTarget::load(path, target.clone(), cfg.comparator).map_err(|e| invalid(e.to_string()))?;
    Ok(Inputs {
        target,
        suite: None,
        evaluator: Box::new(ext),
        target_digest,
        suite_digest: Digest::of(&descriptor),
    })
}

/// Report written for a command, plus its one-line summary and optional CSV.
pub struct Outcome {
    pub report: Value,
    pub summary: String,
    pub csv: Option<String>,
}

#[derive(Serialize)]
struct SiteCount {
    site: usize,
    first_line: usize,
    last_line: usize,
    count: u64,
}

#[derive(Serialize)]
struct StalledWalk {
    #[serde(flatten)]
    result: WalkResult,
    stalled_at_step: usize,
    attempts: usize,
}

fn value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn hermetic<'a>(cmd: Command, cfg: &Config, inputs: &'a Inputs) -> Result<(&'a TreeGenome, &'a TestSuite), Failure> {
    let Some(suite) = &inputs.suite else {
        return Err(invalid(format!(
            "{} seeds defects with the interpreter and needs `suite`, not `external`",
            cmd.name()
        )));
    };
    match &inputs.target {
        Genome::Tree(t) => Ok((t, suite)),
        Genome::Linear(_) => Err(invalid(format!(
            "{} requires a mini-language (tree) program, got {}",
            cmd.name(),
            cfg.target.display()
        ))),
    }
}

/// Runs one experiment. A stalled walk yields both a failure and the partial
/// report.
pub fn execute(cmd: Command, cfg: &Config, inputs: &Inputs) -> (Option<Outcome>, Option<Failure>) {
    match run(cmd, cfg, inputs) {
        Ok(o) => (Some(o), None),
        Err(Failure::Experiment(ExperimentError::WalkStall {
            step,
            attempts,
            partial,
        })) => {
            let partial = *partial;
            let csv = partial.csv();
            let report = value(&StalledWalk {
                result: partial,
                stalled_at_step: step,
                attempts,
            });
            let out = Outcome {
                report,
                summary: format!("walk stalled at step {step} after {attempts} attempts"),
                csv: Some(csv),
            };
            (Some(out), Some(Failure::Stalled { step, attempts }))
        }
        Err(e) => (None, Some(e)),
    }
}

fn run(cmd: Command, cfg: &Config, inputs: &Inputs) -> Result<Outcome, Failure> {
    let g = &inputs.target;
    let ev = inputs.evaluator.as_ref();
    Ok(match cmd {
        Command::Measure => {
            let r = estimate_mutrb(g, ev, cfg.per_op_samples, cfg.seed)?;
            Outcome {
                summary: format!(
                    "pooled MutRB {} ± {} over {} unique mutants",
                    format_float(r.pooled_mutrb),
                    format_float(r.ci95),
                    r.pooled_unique
                ),
                report: value(&r),
                csv: None,
            }
        }
        Command::Exhaustive => {
            let r = exhaustive_mutrb(g, ev, cfg.exhaustive_cap)?.report;
            Outcome {
                summary: format!(
                    "exact MutRB {} ({} of {} unique mutants neutral)",
                    format_float(r.pooled_mutrb),
                    r.pooled_neutral,
                    r.pooled_unique
                ),
                report: value(&r),
                csv: None,
            }
        }
        Command::Coverage => {
            let v = ev.evaluate(g);
            if !v.is_neutral() {
                return Err(ExperimentError::OriginalFails(v).into());
            }
            let cov = ev
                .coverage(g)
                .map_err(|e| Failure::Experiment(ExperimentError::Harness(e)))?;
            let sites: Vec<SiteCount> = g
                .sites()
                .iter()
                .map(|s| SiteCount {
                    site: s.id.0,
                    first_line: s.span.first,
                    last_line: s.span.last,
                    count: cov.count(s.id),
                })
                .collect();
            let report = json!({
                "covered_fraction": cov.covered_fraction(),
                "covered_sites": cov.covered_count(),
                "total_sites": sites.len(),
                "sites": sites,
            });
            Outcome {
                summary: format!(
                    "{} of {} sites covered ({})",
                    cov.covered_count(),
                    sites.len(),
                    format_float(cov.covered_fraction())
                ),
                report,
                csv: None,
            }
        }
        Command::Walk => {
            let wc = WalkConfig {
                population: cfg.walk.population,
                steps: cfg.walk.steps,
                size_cap: cfg.walk.size_cap,
                robustness_samples: cfg.walk.robustness_samples,
                ..WalkConfig::default()
            };
            let r = neutral_walk(g, ev, &wc, cfg.seed)?;
            let last = r.series.last().expect("step 0 is always present");
            Outcome {
                summary: format!(
                    "walk reached step {}: mean size {} {}, mean MutRB {}",
                    last.step,
                    format_float(last.mean_size),
                    r.size_unit,
                    format_float(last.mean_mutrb)
                ),
                csv: Some(r.csv()),
                report: value(&r),
            }
        }
        Command::SeedBugs => {
            let (t, suite) = hermetic(cmd, cfg, inputs)?;
            let s = seed_defects(t, suite, &cfg.limits, cfg.repair.n_defects, &cfg.seeding, cfg.seed)?;
            Outcome {
                summary: format!("seeded {} defects", s.defects().len()),
                report: value(&s),
                csv: None,
            }
        }
        Command::Repair => {
            let (t, suite) = hermetic(cmd, cfg, inputs)?;
            let s = seed_defects(t, suite, &cfg.limits, cfg.repair.n_defects, &cfg.seeding, cfg.seed)?;
            let buggy = Genome::Tree(s.buggy().clone());
            let r = proactive_repair(
                &buggy,
                ev,
                s.defects(),
                cfg.repair.n_variants,
                cfg.repair.mode,
                &cfg.limits,
                cfg.seed,
            )?;
            Outcome {
                summary: format!(
                    "{} of {} seeded defects repaired by {} of {} neutral variants",
                    r.unique_bugs_fixed,
                    r.defects,
                    r.bug_fix_variants,
                    r.variants_generated
                ),
                report: json!({
                    "buggy_program": buggy.serialize(),
                    "defects": value(&s.defects()),
                    "repair": value(&r),
                }),
                csv: None,
            }
        }
        Command::Sweep => {
            let (t, suite) = hermetic(cmd, cfg, inputs)?;
            let r = seeded_bug_sweep(
                t,
                suite,
                &cfg.limits,
                &cfg.sweep.n_values,
                cfg.sweep.n_variants,
                &cfg.seeding,
                cfg.seed,
            )?;
            let rs = r.pearson_r.map(format_float).unwrap_or_else(|| "undefined".into());
            Outcome {
                summary: format!("{} sweep points, pearson r {rs}", r.points.len()),
                csv: Some(r.csv()),
                report: value(&r),
            }
        }
    })
}

pub fn envelope(cmd: Command, cfg: &Config, inputs: &Inputs, report: Value) -> Value {
    let config_json = to_canonical_json(cfg).expect("config serializes");
    json!({
        "schema": format!("mutrb.{}/1", cmd.name()),
        "command": cmd.name(),
        "seed": cfg.seed,
        "config": value(cfg),
        "config_digest": Digest::of(&config_json).to_hex(),
        "corpus_digests": {
            "target": inputs.target_digest.to_hex(),
            "suite": inputs.suite_digest.to_hex(),
        },
        "report": report,
    })
}

pub fn output_path(cmd: Command, cfg: &Config) -> PathBuf {
    cfg.output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.json", cmd.name())))
}

pub fn check_writable(path: &Path) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(invalid(format!("output directory {} does not exist", dir.display())));
    }
    Ok(())
}

pub fn write_outputs(path: &Path, envelope: &Value, csv: Option<&str>) -> Result<(), Failure> {
    let err = |p: &Path| {
        let p = p.display().to_string();
        move |e| Failure::Write(p, e)
    };
    let text = to_canonical_json(envelope).expect("values serialize");
    std::fs::write(path, text).map_err(err(path))?;
    if let Some(csv) = csv {
        let p = path.with_extension("csv");
        std::fs::write(&p, csv).map_err(err(&p))?;
    }
    Ok(())
}
