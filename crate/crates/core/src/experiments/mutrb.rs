//! The neutral fraction of first-order mutants, sampled or enumerated.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{stratified, Stratum};
use super::{gate, tag, ExperimentError};
use crate::genome::{
    eligible_count, enumerate_mutations, sample_mutation, Digest, Genome, Mutation, MutationError,
    MutationKind, Representation,
};
use crate::harness::{Comparator, DedupLedger, Evaluator, Freshness, Outcome};
use crate::minilang::CoverageMap;
use crate::rng::rng_for;

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 250_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorStats {
    pub unique_mutants: usize,
    pub neutral: usize,
    pub mutrb: f64,
    /// Raw draws, repeats included.
    pub attempts: usize,
    /// Distinct mutations whose result matched an earlier mutant.
    pub duplicates: usize,
    /// Size of the operator's mutation space over covered sites.
    pub eligible: usize,
    /// The whole space was enumerated.
    pub exhausted: bool,
    /// Estimated number of unique mutants the operator can produce; the
    /// operator's weight in the pooled estimate.
    pub weight: f64,
    pub outcomes: BTreeMap<String, usize>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub per_operator: BTreeMap<String, OperatorStats>,
    /// Neutral fraction over all unique mutants, each operator weighted by
    /// the size of its unique-mutant space.
    pub pooled_mutrb: f64,
    pub pooled_unique: usize,
    pub pooled_neutral: usize,
    pub ci95: f64,
    pub comparator: Comparator,
    pub coverage_fraction: f64,
    pub covered_sites: usize,
    pub total_sites: usize,
    pub representation: Representation,
    pub exhaustive: bool,
    pub per_op_samples: Option<usize>,
    pub seed: Option<u64>,
}

/// One unique mutant from an exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MutantRecord {
    pub mutation: Mutation,
    pub key: Digest,
    pub outcome: Outcome,
}

#[derive(Clone, Debug)]
pub struct Exhaustive {
    pub report: RobustnessReport,
    /// Unique mutants in enumeration order.
    pub mutants: Vec<MutantRecord>,
}

struct Drawn {
    mutants: Vec<(Mutation, Genome, Digest)>,
    attempts: usize,
    distinct: usize,
    duplicates: usize,
    eligible: usize,
    exhausted: bool,
}

fn draw_unique(
    g: &Genome,
    cov: &CoverageMap,
    kind: MutationKind,
    want: usize,
    rng: &mut impl Rng,
) -> Result<Drawn, MutationError> {
    let eligible = eligible_count(g, cov, kind)?;
    let mut ledger = DedupLedger::new();
    let mut mutants = Vec::new();
    if want >= eligible {
        let mut all = enumerate_mutations(g, cov, kind)?;
        all.shuffle(rng);
        for m in &all {
            let child = g.apply(m)?;
            let key = child.canonical_key();
            if ledger.offer_key(key) == Freshness::Fresh {
                mutants.push((*m, child, key));
            }
        }
        return Ok(Drawn {
            mutants,
            attempts: all.len(),
            distinct: all.len(),
            duplicates: ledger.duplicate_count,
            eligible,
            exhausted: true,
        });
    }
    let budget = (100 * want).max(10_000);
    let mut seen = HashSet::new();
    let mut attempts = 0;
    while mutants.len() < want && seen.len() < eligible && attempts < budget {
        attempts += 1;
        let m = sample_mutation(g, cov, kind, rng)?;
        if !seen.insert(m) {
            continue;
        }
        let child = g.apply(&m)?;
        let key = child.canonical_key();
        if ledger.offer_key(key) == Freshness::Fresh {
            mutants.push((m, child, key));
        }
    }
    Ok(Drawn {
        mutants,
        attempts,
        distinct: seen.len(),
        duplicates: ledger.duplicate_count,
        eligible,
        exhausted: seen.len() == eligible,
    })
}

fn outcome_counts(outcomes: &[Outcome]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for o in outcomes {
        let name = serde_json::to_value(o).expect("outcome serializes");
        *m.entry(name.as_str().unwrap_or_default().to_string()).or_insert(0) += 1;
    }
    m
}

fn skipped(eligible: usize, reason: String) -> OperatorStats {
    OperatorStats {
        unique_mutants: 0,
        neutral: 0,
        mutrb: 0.0,
        attempts: 0,
        duplicates: 0,
        eligible,
        exhausted: false,
        weight: 0.0,
        outcomes: BTreeMap::new(),
        skipped: Some(reason),
    }
}

fn stats_for(d: &Drawn, outcomes: &[Outcome]) -> OperatorStats {
    let unique = d.mutants.len();
    let neutral = outcomes.iter().filter(|o| o.is_neutral()).count();
    let weight = if d.exhausted {
        unique as f64
    } else if d.distinct == 0 {
        0.0
    } else {
        d.eligible as f64 * unique as f64 / d.distinct as f64
    };
    OperatorStats {
        unique_mutants: unique,
        neutral,
        mutrb: if unique == 0 { 0.0 } else { neutral as f64 / unique as f64 },
        attempts: d.attempts,
        duplicates: d.duplicates,
        eligible: d.eligible,
        exhausted: d.exhausted,
        weight,
        outcomes: outcome_counts(outcomes),
        skipped: None,
    }
}

struct Pooled {
    per_operator: BTreeMap<String, OperatorStats>,
    mutants: Vec<MutantRecord>,
}

fn measure(
    g: &Genome,
    ev: &dyn Evaluator,
    cov: &CoverageMap,
    per_op: Option<usize>,
    seed: u64,
) -> Result<Pooled, ExperimentError> {
    let mut per_operator = BTreeMap::new();
    let mut records = Vec::new();
    for (k, kind) in MutationKind::ALL.into_iter().enumerate() {
        let mut rng = rng_for(seed, &[tag::MEASURE, k as u64]);
        let drawn = match draw_unique(g, cov, kind, per_op.unwrap_or(usize::MAX), &mut rng) {
            Ok(d) => d,
            Err(e @ (MutationError::SwapInfeasible | MutationError::DeleteInfeasible)) => {
                per_operator.insert(kind.name().to_string(), skipped(0, e.to_string()));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let outcomes: Vec<Outcome> = drawn
            .mutants
            .par_iter()
            .map(|(_, child, _)| ev.evaluate(child).outcome)
            .collect();
        per_operator.insert(kind.name().to_string(), stats_for(&drawn, &outcomes));
        records.extend(
            drawn
                .mutants
                .iter()
                .zip(&outcomes)
                .map(|((m, _, key), o)| MutantRecord {
                    mutation: *m,
                    key: *key,
                    outcome: *o,
                }),
        );
    }
    Ok(Pooled {
        per_operator,
        mutants: records,
    })
}

fn report(
    g: &Genome,
    ev: &dyn Evaluator,
    cov: &CoverageMap,
    pooled: &Pooled,
    per_op: Option<usize>,
    seed: Option<u64>,
) -> RobustnessReport {
    let strata: Vec<Stratum> = pooled
        .per_operator
        .values()
        .map(|s| Stratum {
            weight: s.weight,
            successes: s.neutral,
            sampled: s.unique_mutants,
            census: s.exhausted,
        })
        .collect();
    let (p, ci) = stratified(&strata);
    RobustnessReport {
        pooled_mutrb: p,
        pooled_unique: pooled.per_operator.values().map(|s| s.unique_mutants).sum(),
        pooled_neutral: pooled.per_operator.values().map(|s| s.neutral).sum(),
        per_operator: pooled.per_operator.clone(),
        ci95: ci,
        comparator: ev.comparator(),
        coverage_fraction: cov.covered_fraction(),
        covered_sites: cov.covered_count(),
        total_sites: g.site_count(),
        representation: g.representation(),
        exhaustive: per_op.is_none(),
        per_op_samples: per_op,
        seed,
    }
}

/// Samples up to `per_op_samples` unique mutants per operator and reports
/// their neutral fractions. When an operator's whole space is no larger than
/// the request, it is enumerated instead.
pub fn estimate_mutrb(
    g: &Genome,
    ev: &dyn Evaluator,
    per_op_samples: usize,
    seed: u64,
) -> Result<RobustnessReport, ExperimentError> {
    if per_op_samples == 0 {
        return Err(ExperimentError::Config("per_op_samples must be at least 1".into()));
    }
    let cov = gate(g, ev)?;
    if cov.covered_count() == 0 {
        return Err(MutationError::NoCoveredSites.into());
    }
    let pooled = measure(g, ev, &cov, Some(per_op_samples), seed)?;
    Ok(report(g, ev, &cov, &pooled, Some(per_op_samples), Some(seed)))
}

/// Evaluates every unique first-order mutant over covered sites.
pub fn exhaustive_mutrb(g: &Genome, ev: &dyn Evaluator, cap: usize) -> Result<Exhaustive, ExperimentError> {
    let cov = gate(g, ev)?;
    if cov.covered_count() == 0 {
        return Err(MutationError::NoCoveredSites.into());
    }
    let mut total = 0;
    for kind in MutationKind::ALL {
        match eligible_count(g, &cov, kind) {
            Ok(n) => total += n,
            Err(MutationError::SwapInfeasible | MutationError::DeleteInfeasible) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if total > cap {
        return Err(ExperimentError::CapExceeded(total, cap));
    }
    // Enumeration is exhaustive, so the shuffle seed cannot affect counts.
    let pooled = measure(g, ev, &cov, None, 0)?;
    let report = report(g, ev, &cov, &pooled, None, None);
    Ok(Exhaustive {
        report,
        mutants: pooled.mutants,
    })
}
