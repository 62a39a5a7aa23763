//! Recorded results replayed through the same arithmetic the live
//! experiments use.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::pearson;
use crate::harness::{DedupLedger, Outcome};
use crate::genome::Digest;

/// One recorded mutant verdict.
#[derive(Clone, Debug, Deserialize)]
pub struct RecordedMutant {
    pub key: Digest,
    pub operator: String,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub unique: usize,
    pub neutral: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutrbFixture {
    pub name: String,
    #[serde(default)]
    pub mutants: Vec<RecordedMutant>,
    /// Pre-aggregated counts by label, for sources that only publish totals.
    #[serde(default)]
    pub tallies: BTreeMap<String, Tally>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplayReport {
    pub name: String,
    pub per_label: BTreeMap<String, Tally>,
    pub pooled_unique: usize,
    pub pooled_neutral: usize,
    pub pooled_mutrb: f64,
    pub duplicates: usize,
}

/// Dedups recorded mutants per operator and pools the neutral ratio.
pub fn replay_mutrb(f: &MutrbFixture) -> ReplayReport {
    let mut per_label = f.tallies.clone();
    let mut ledgers: BTreeMap<&str, DedupLedger> = BTreeMap::new();
    let mut duplicates = 0;
    for m in &f.mutants {
        let ledger = ledgers.entry(&m.operator).or_default();
        if ledger.offer_key(m.key) == crate::harness::Freshness::Fresh {
            let t = per_label.entry(m.operator.clone()).or_default();
            t.unique += 1;
            t.neutral += m.outcome.is_neutral() as usize;
        } else {
            duplicates += 1;
        }
    }
    let pooled_unique = per_label.values().map(|t| t.unique).sum();
    let pooled_neutral = per_label.values().map(|t| t.neutral).sum();
    ReplayReport {
        name: f.name.clone(),
        pooled_mutrb: if pooled_unique == 0 {
            0.0
        } else {
            pooled_neutral as f64 / pooled_unique as f64
        },
        per_label,
        pooled_unique,
        pooled_neutral,
        duplicates,
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairRow {
    pub program: String,
    pub fixed: usize,
    pub seeded: usize,
    pub fixes: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairTableFixture {
    pub name: String,
    pub rows: Vec<RepairRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepairTableReplay {
    pub programs: usize,
    pub mean_bugs_fixed: f64,
    pub mean_fixes: f64,
}

pub fn replay_repair_table(f: &RepairTableFixture) -> RepairTableReplay {
    let n = f.rows.len().max(1) as f64;
    RepairTableReplay {
        programs: f.rows.len(),
        mean_bugs_fixed: f.rows.iter().map(|r| r.fixed).sum::<usize>() as f64 / n,
        mean_fixes: f.rows.iter().map(|r| r.fixes).sum::<usize>() as f64 / n,
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFixture {
    pub name: String,
    pub n_seeded: Vec<usize>,
    pub bugs_fixed: Vec<usize>,
    pub variants_needed: Vec<Option<usize>>,
}

pub fn replay_sweep_correlation(f: &SweepFixture) -> Option<f64> {
    let x: Vec<f64> = f.n_seeded.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = f.bugs_fixed.iter().map(|&v| v as f64).collect();
    pearson(&x, &y)
}
