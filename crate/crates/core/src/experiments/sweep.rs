//! Bugs repaired as a function of bugs seeded.

use std::collections::BTreeSet;

use serde::Serialize;

use super::defects::{seed_defects, SeedConfig};
use super::repair::{generate_neutral_variants, score, GenerationMode};
use super::stats::pearson;
use super::{tag, ExperimentError};
use crate::genome::{Genome, Mutation, SiteId, TreeGenome};
use crate::harness::{HermeticEvaluator, TestSuite};
use crate::minilang::Limits;
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepPoint {
    pub n_seeded: usize,
    pub bugs_fixed: usize,
    /// 1-based position of the first repairing variant in selection order.
    pub variants_needed: Option<usize>,
    pub neutral_variants: usize,
    pub selected_variants: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub pearson_r: Option<f64>,
    pub n_variants: usize,
    pub seed: u64,
}

impl SweepReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("n_seeded,bugs_fixed,variants_needed\n");
        for p in &self.points {
            let needed = p.variants_needed.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", p.n_seeded, p.bugs_fixed, needed));
        }
        out
    }
}

/// Greedy order: repeatedly take the variant touching the most sites not yet
/// touched, earliest first on ties.
pub(crate) fn select_spread(variants: &[(Mutation, Genome)], n: usize) -> Vec<usize> {
    let mut touched: BTreeSet<SiteId> = BTreeSet::new();
    let mut taken = vec![false; variants.len()];
    let mut order = Vec::new();
    while order.len() < n.min(variants.len()) {
        let mut best: Option<(usize, usize)> = None;
        for (i, (m, _)) in variants.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let gain = m.sites().iter().filter(|s| !touched.contains(s)).count();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let (i, _) = best.expect("an untaken variant remains");
        taken[i] = true;
        touched.extend(variants[i].0.sites());
        order.push(i);
    }
    order
}

/// Seeds `max(n_values)` defects once, then for each `n` repairs the program
/// carrying the first `n` of them with up to `n_variants` neutral variants.
pub fn seeded_bug_sweep(
    target: &TreeGenome,
    suite: &TestSuite,
    limits: &Limits,
    n_values: &[usize],
    n_variants: usize,
    seed_cfg: &SeedConfig,
    seed: u64,
) -> Result<SweepReport, ExperimentError> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(ExperimentError::Config("n_values must be non-empty and each at least 1".into()));
    }
    if n_variants == 0 {
        return Err(ExperimentError::Config("n_variants must be at least 1".into()));
    }
    let max_n = *n_values.iter().max().expect("non-empty");
    let seeded = seed_defects(target, suite, limits, max_n, seed_cfg, derive_seed(seed, &[tag::SWEEP]))?;
    let ev = HermeticEvaluator::new(suite.clone(), *limits);
    let mut points = Vec::new();
    for &n in n_values {
        let stage = &seeded.stages[n];
        let buggy = Genome::Tree(stage.program.clone());
        let set = generate_neutral_variants(
            &buggy,
            &ev,
            usize::MAX,
            GenerationMode::ExhaustiveFirstOrder,
            derive_seed(seed, &[tag::SWEEP, n as u64]),
        )?;
        let order = select_spread(&set.variants, n_variants);
        let chosen: Vec<(Mutation, Genome)> = order.iter().map(|&i| set.variants[i].clone()).collect();
        let repairs = score(&buggy, &chosen, &stage.defects, limits);
        let fixed: BTreeSet<usize> = repairs
            .iter()
            .flatten()
            .flat_map(|r| r.fixed.iter().map(|f| f.defect))
            .collect();
        points.push(SweepPoint {
            n_seeded: n,
            bugs_fixed: fixed.len(),
            variants_needed: repairs.iter().position(Option::is_some).map(|i| i + 1),
            neutral_variants: set.variants.len(),
            selected_variants: chosen.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n_seeded as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.bugs_fixed as f64).collect();
    Ok(SweepReport {
        pearson_r: pearson(&xs, &ys),
        points,
        n_variants,
        seed,
    })
}
