//! Cumulative neutral walks: each generation applies one more neutral
//! mutation to every member of the population.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{gate, tag, ExperimentError};
use crate::genome::{sample_mutation, Digest, Genome, MutationKind, Variant};
use crate::harness::Evaluator;
use crate::minilang::CoverageMap;
use crate::report::format_float;
use crate::rng::rng_for;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WalkConfig {
    pub population: usize,
    pub steps: usize,
    /// Only accept variants no larger than the original.
    pub size_cap: bool,
    /// Mutations sampled per member to estimate its robustness.
    pub robustness_samples: usize,
    /// Attempts allowed per step, as a multiple of the population size.
    pub attempts_per_member: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            population: 100,
            steps: 250,
            size_cap: false,
            robustness_samples: 30,
            attempts_per_member: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkStep {
    pub step: usize,
    pub mean_size: f64,
    pub max_size: usize,
    pub mean_mutrb: f64,
    pub population: Vec<Digest>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkResult {
    pub series: Vec<WalkStep>,
    pub size_unit: String,
    pub original_size: usize,
    #[serde(skip)]
    pub final_population: Vec<Variant>,
}

impl WalkResult {
    /// `step,mean_size,mean_mutrb` rows.
    pub fn csv(&self) -> String {
        let mut out = String::from("step,mean_size,mean_mutrb\n");
        for s in &self.series {
            out.push_str(&format!(
                "{},{},{}\n",
                s.step,
                format_float(s.mean_size),
                format_float(s.mean_mutrb)
            ));
        }
        out
    }
}

struct Member {
    variant: Variant,
    coverage: CoverageMap,
}

fn member_mutrb(m: &Member, ev: &dyn Evaluator, samples: usize, seed: u64, step: usize, idx: usize) -> f64 {
    let mut rng = rng_for(seed, &[tag::WALK_ROBUSTNESS, step as u64, idx as u64]);
    let mut children = Vec::with_capacity(samples);
    for _ in 0..samples {
        let kind = MutationKind::ALL[rng.gen_range(0..3)];
        if let Ok(mu) = sample_mutation(&m.variant.genome, &m.coverage, kind, &mut rng) {
            if let Ok(child) = m.variant.genome.apply(&mu) {
                children.push(child);
            }
        }
    }
    if children.is_empty() {
        return 0.0;
    }
    let neutral = children
        .par_iter()
        .filter(|c| ev.evaluate(c).is_neutral())
        .count();
    neutral as f64 / children.len() as f64
}

fn summarize(members: &[Member], ev: &dyn Evaluator, cfg: &WalkConfig, seed: u64, step: usize) -> WalkStep {
    let sizes: Vec<usize> = members.iter().map(|m| m.variant.genome.size()).collect();
    let rob: Vec<f64> = members
        .iter()
        .enumerate()
        .map(|(i, m)| member_mutrb(m, ev, cfg.robustness_samples, seed, step, i))
        .collect();
    let n = members.len() as f64;
    WalkStep {
        step,
        mean_size: sizes.iter().sum::<usize>() as f64 / n,
        max_size: sizes.iter().copied().max().unwrap_or(0),
        mean_mutrb: rob.iter().sum::<f64>() / n,
        population: members.iter().map(|m| m.variant.genome.canonical_key()).collect(),
    }
}

/// Runs a walk from `g`. Step 0 is the original alone; each later step holds
/// `population` members, each one neutral mutation further from the origin.
pub fn neutral_walk(g: &Genome, ev: &dyn Evaluator, cfg: &WalkConfig, seed: u64) -> Result<WalkResult, ExperimentError> {
    if cfg.population == 0 {
        return Err(ExperimentError::Config("population must be at least 1".into()));
    }
    let cov = gate(g, ev)?;
    let original_size = g.size();
    let mut members = vec![Member {
        variant: Variant::original(g.clone()),
        coverage: cov,
    }];
    let mut result = WalkResult {
        series: vec![summarize(&members, ev, cfg, seed, 0)],
        size_unit: g.size_unit().to_string(),
        original_size,
        final_population: Vec::new(),
    };
    let budget = cfg.population * cfg.attempts_per_member.max(1);
    for step in 1..=cfg.steps {
        let mut next: Vec<Member> = Vec::with_capacity(cfg.population);
        let mut attempts = 0;
        while next.len() < cfg.population {
            if attempts >= budget {
                result.final_population = members.into_iter().map(|m| m.variant).collect();
                return Err(ExperimentError::WalkStall {
                    step,
                    attempts,
                    partial: Box::new(result),
                });
            }
            // A batch of candidates cycling over the previous generation.
            let batch: Vec<usize> = (attempts..(attempts + cfg.population).min(budget)).collect();
            attempts += batch.len();
            let tried: Vec<Option<Member>> = batch
                .par_iter()
                .map(|&a| {
                    let parent = &members[a % members.len()];
                    let mut rng = rng_for(seed, &[tag::WALK, step as u64, a as u64]);
                    let kind = MutationKind::ALL[rng.gen_range(0..3)];
                    let mu = sample_mutation(&parent.variant.genome, &parent.coverage, kind, &mut rng).ok()?;
                    let child = parent.variant.derive(mu).ok()?;
                    if cfg.size_cap && child.genome.size() > original_size {
                        return None;
                    }
                    match ev.evaluate_with_coverage(&child.genome) {
                        Ok((v, Some(coverage))) if v.is_neutral() => Some(Member {
                            variant: child,
                            coverage,
                        }),
                        _ => None,
                    }
                })
                .collect();
            for m in tried.into_iter().flatten() {
                if next.len() < cfg.population {
                    next.push(m);
                }
            }
        }
        members = next;
        result.series.push(summarize(&members, ev, cfg, seed, step));
    }
    result.final_population = members.into_iter().map(|m| m.variant).collect();
    Ok(result)
}
