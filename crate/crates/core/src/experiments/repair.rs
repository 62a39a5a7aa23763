//! Proactive repair: neutral first-order variants of a buggy program, scored
//! afterwards against held-out tests they never saw.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::defects::DefectSpec;
use super::{gate, tag, ExperimentError};
use crate::genome::{
    enumerate_mutations, sample_mutation, Digest, Genome, LineSpan, Mutation, MutationError, MutationKind,
};
use crate::harness::{evaluate, Comparator, DedupLedger, Evaluator, Freshness, TestSuite};
use crate::minilang::Limits;
use crate::rng::rng_for;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    #[default]
    Sampled,
    ExhaustiveFirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Locality {
    SameLine,
    Near,
    Compensatory,
}

/// Lines of the buggy program a mutation touches.
pub fn mutation_spans(buggy: &Genome, m: &Mutation) -> Vec<LineSpan> {
    let sites = buggy.sites();
    let span = |id| sites.iter().find(|s| s.id == id).map(|s| s.span);
    match m.kind {
        MutationKind::Delete | MutationKind::Copy => span(m.target).into_iter().collect(),
        MutationKind::Swap => m.sites().into_iter().filter_map(span).collect(),
    }
}

/// Same line when a mutated span meets the defect's lines, near within five
/// lines, compensatory otherwise.
pub fn classify_repair_locality(buggy: &Genome, m: &Mutation, defect: &DefectSpec) -> Locality {
    let d = mutation_spans(buggy, m)
        .iter()
        .map(|s| s.distance(&defect.lines))
        .min()
        .unwrap_or(usize::MAX);
    match d {
        0 => Locality::SameLine,
        1..=5 => Locality::Near,
        _ => Locality::Compensatory,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeutralSet {
    pub variants: Vec<(Mutation, Genome)>,
    pub attempts: usize,
    pub stalled: bool,
}

impl NeutralSet {
    pub fn digests(&self) -> Vec<Digest> {
        self.variants.iter().map(|(_, g)| g.canonical_key()).collect()
    }
}

const BATCH: usize = 64;

/// Up to `n` unique neutral first-order variants of `g`. Sees only the
/// visible suite through `ev`.
pub fn generate_neutral_variants(
    g: &Genome,
    ev: &dyn Evaluator,
    n: usize,
    mode: GenerationMode,
    seed: u64,
) -> Result<NeutralSet, ExperimentError> {
    let cov = gate(g, ev)?;
    let mut ledger = DedupLedger::new();
    ledger.offer(g);
    let mut variants = Vec::new();
    let mut attempts = 0;
    match mode {
        GenerationMode::Sampled => {
            let budget = 20 * n;
            let mut batch_no = 0u64;
            while variants.len() < n && attempts < budget {
                let mut rng = rng_for(seed, &[tag::REPAIR, batch_no]);
                batch_no += 1;
                let mut batch = Vec::new();
                while batch.len() < BATCH && attempts < budget {
                    attempts += 1;
                    let kind = MutationKind::ALL[rng.gen_range(0..3)];
                    let m = match sample_mutation(g, &cov, kind, &mut rng) {
                        Ok(m) => m,
                        Err(MutationError::SwapInfeasible | MutationError::DeleteInfeasible) => continue,
                        Err(e) => return Err(e.into()),
                    };
                    let child = g.apply(&m)?;
                    if ledger.offer(&child) == Freshness::Fresh {
                        batch.push((m, child));
                    }
                }
                keep_neutral(ev, batch, n, &mut variants);
            }
        }
        GenerationMode::ExhaustiveFirstOrder => {
            let mut all = Vec::new();
            for kind in [MutationKind::Delete, MutationKind::Copy, MutationKind::Swap] {
                match enumerate_mutations(g, &cov, kind) {
                    Ok(ms) => all.extend(ms),
                    Err(MutationError::SwapInfeasible | MutationError::DeleteInfeasible) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            for chunk in all.chunks(BATCH * 4) {
                if variants.len() >= n {
                    break;
                }
                let mut batch = Vec::new();
                for m in chunk {
                    attempts += 1;
                    let child = g.apply(m)?;
                    if ledger.offer(&child) == Freshness::Fresh {
                        batch.push((*m, child));
                    }
                }
                keep_neutral(ev, batch, n, &mut variants);
            }
        }
    }
    let stalled = variants.len() < n;
    Ok(NeutralSet {
        variants,
        attempts,
        stalled,
    })
}

fn keep_neutral(ev: &dyn Evaluator, batch: Vec<(Mutation, Genome)>, n: usize, out: &mut Vec<(Mutation, Genome)>) {
    let neutral: Vec<bool> = batch.par_iter().map(|(_, c)| ev.evaluate(c).is_neutral()).collect();
    for (cand, ok) in batch.into_iter().zip(neutral) {
        if ok && out.len() < n {
            out.push(cand);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FixedDefect {
    /// Index into the defect list.
    pub defect: usize,
    pub locality: Locality,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Repair {
    pub variant: Digest,
    pub mutation: Mutation,
    pub fixed: Vec<FixedDefect>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepairReport {
    pub mode: GenerationMode,
    pub variants_requested: usize,
    pub variants_generated: usize,
    pub attempts: usize,
    pub stalled: bool,
    /// Digest over the sorted digests of every generated variant.
    pub variant_set_digest: Digest,
    #[serde(skip)]
    pub variant_digests: Vec<Digest>,
    pub defects: usize,
    pub repairs: Vec<Repair>,
    pub unique_bugs_fixed: usize,
    pub bug_fix_variants: usize,
    pub fixed_defects: Vec<usize>,
    pub same_line: usize,
    pub near: usize,
    pub compensatory: usize,
    pub seed: u64,
}

/// Whether `g` passes the held-out test of `d`.
pub(crate) fn passes_held_out(g: &Genome, d: &DefectSpec, limits: &Limits) -> bool {
    let suite = TestSuite {
        cases: vec![d.held_out.clone()],
        comparator: Comparator::Exact,
    };
    evaluate(g, &suite, limits).is_neutral()
}

pub(crate) fn score(
    buggy: &Genome,
    variants: &[(Mutation, Genome)],
    defects: &[DefectSpec],
    limits: &Limits,
) -> Vec<Option<Repair>> {
    variants
        .par_iter()
        .map(|(m, g)| {
            let fixed: Vec<FixedDefect> = defects
                .iter()
                .enumerate()
                .filter(|(_, d)| passes_held_out(g, d, limits))
                .map(|(i, d)| FixedDefect {
                    defect: i,
                    locality: classify_repair_locality(buggy, m, d),
                })
                .collect();
            (!fixed.is_empty()).then(|| Repair {
                variant: g.canonical_key(),
                mutation: *m,
                fixed,
            })
        })
        .collect()
}

pub(crate) fn set_digest(digests: &[Digest]) -> Digest {
    let sorted: BTreeSet<String> = digests.iter().map(Digest::to_hex).collect();
    Digest::of(&sorted.into_iter().collect::<Vec<_>>().join("\n"))
}

/// Generates neutral variants of `buggy` without looking at `defects`, then
/// checks which held-out tests each variant passes.
pub fn proactive_repair(
    buggy: &Genome,
    ev: &dyn Evaluator,
    defects: &[DefectSpec],
    n_variants: usize,
    mode: GenerationMode,
    limits: &Limits,
    seed: u64,
) -> Result<RepairReport, ExperimentError> {
    if n_variants == 0 {
        return Err(ExperimentError::Config("n_variants must be at least 1".into()));
    }
    let set = generate_neutral_variants(buggy, ev, n_variants, mode, seed)?;
    let digests = set.digests();
    let repairs: Vec<Repair> = score(buggy, &set.variants, defects, limits)
        .into_iter()
        .flatten()
        .collect();
    let fixed: BTreeSet<usize> = repairs.iter().flat_map(|r| r.fixed.iter().map(|f| f.defect)).collect();
    let count = |l: Locality| repairs.iter().flat_map(|r| &r.fixed).filter(|f| f.locality == l).count();
    Ok(RepairReport {
        mode,
        variants_requested: n_variants,
        variants_generated: set.variants.len(),
        attempts: set.attempts,
        stalled: set.stalled,
        variant_set_digest: set_digest(&digests),
        variant_digests: digests,
        defects: defects.len(),
        unique_bugs_fixed: fixed.len(),
        bug_fix_variants: repairs.len(),
        fixed_defects: fixed.into_iter().collect(),
        same_line: count(Locality::SameLine),
        near: count(Locality::Near),
        compensatory: count(Locality::Compensatory),
        repairs,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{parse_tree, SiteId};
    use crate::harness::TestCase;

    fn defect_at(first: usize, last: usize) -> DefectSpec {
        DefectSpec {
            class: super::super::DefectClass::ExtraStatement,
            site: SiteId(0),
            lines: LineSpan { first, last },
            description: String::new(),
            held_out: TestCase::new("h", "", ""),
        }
    }

    #[test]
    fn locality_classes() {
        let src: String = (0..60).map(|i| format!("x{i} := {i};\n")).collect();
        let g = Genome::Tree(parse_tree(&src).unwrap());
        let d = defect_at(10, 10);
        assert_eq!(classify_repair_locality(&g, &Mutation::delete(SiteId(9)), &d), Locality::SameLine);
        assert_eq!(classify_repair_locality(&g, &Mutation::delete(SiteId(12)), &d), Locality::Near);
        assert_eq!(classify_repair_locality(&g, &Mutation::delete(SiteId(50)), &d), Locality::Compensatory);
        assert_eq!(
            classify_repair_locality(&g, &Mutation::swap(SiteId(50), SiteId(14)), &d),
            Locality::Near
        );
    }
}
