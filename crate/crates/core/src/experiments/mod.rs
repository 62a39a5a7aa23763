//! Robustness estimation, neutral walks, defect seeding and proactive repair.
//!
//! Every procedure takes an [`Evaluator`](crate::harness::Evaluator) and a
//! master seed. Independent evaluations run on the current rayon pool and are
//! collected in task order, so results do not depend on the number of
//! workers.

mod defects;
mod mutrb;
mod repair;
pub mod replay;
pub mod stats;
mod sweep;
mod walk;

use thiserror::Error;

use crate::genome::{Genome, MutationError};
use crate::harness::{Evaluator, HarnessError, Verdict};
use crate::minilang::CoverageMap;

pub use defects::{seed_defects, DefectClass, DefectSpec, SeedConfig, Seeded};
pub use mutrb::{
    estimate_mutrb, exhaustive_mutrb, Exhaustive, MutantRecord, OperatorStats, RobustnessReport,
    DEFAULT_EXHAUSTIVE_CAP,
};
pub use repair::{
    classify_repair_locality, generate_neutral_variants, mutation_spans, proactive_repair,
    GenerationMode, Locality, NeutralSet, Repair, RepairReport,
};
pub use sweep::{seeded_bug_sweep, SweepPoint, SweepReport};
pub use walk::{neutral_walk, WalkConfig, WalkResult, WalkStep};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("the original program does not pass its suite ({:?} after {} case(s))", .0.outcome, .0.cases_run)]
    OriginalFails(Verdict),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{0} mutations exceed the enumeration cap of {1}")]
    CapExceeded(usize, usize),
    #[error("walk stalled at step {step} after {attempts} attempts")]
    WalkStall {
        step: usize,
        attempts: usize,
        partial: Box<WalkResult>,
    },
    #[error("placed {placed} of {requested} defects before the attempt budget ran out")]
    SeedingFailed { placed: usize, requested: usize },
    #[error("{0} requires a mini-language (tree) program")]
    NeedsTree(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Stream tags keeping the random streams of different procedures apart.
pub(crate) mod tag {
    pub const MEASURE: u64 = 1;
    pub const WALK: u64 = 2;
    pub const WALK_ROBUSTNESS: u64 = 3;
    pub const SEED: u64 = 4;
    pub const REPAIR: u64 = 5;
    pub const SWEEP: u64 = 6;
}

/// Refuses to proceed unless the original is neutral; returns its coverage.
pub(crate) fn gate(g: &Genome, ev: &dyn Evaluator) -> Result<CoverageMap, ExperimentError> {
    let v = ev.evaluate(g);
    if !v.is_neutral() {
        return Err(ExperimentError::OriginalFails(v));
    }
    Ok(ev.coverage(g)?)
}
