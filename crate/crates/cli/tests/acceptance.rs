//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line on
//! stderr, uncaptured, along with its wall-clock time and budget.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use mutrb_core::corpus;
use mutrb_core::experiments::replay::{replay_mutrb, MutrbFixture};
use mutrb_core::experiments::*;
use mutrb_core::genome::{Genome, MutationKind, Variant};
use mutrb_core::harness::{evaluate, Comparator, Evaluator, HermeticEvaluator, TestCase, TestSuite};
use mutrb_core::minilang::Limits;
use mutrb_core::report::format_float;
use tempfile::tempdir;

mod laws {
    include!("../../core/tests/properties.rs");

    pub fn all() {
        round_trip();
        swap_is_an_involution();
        delete_and_copy_count_laws();
        sampling_stays_on_covered_sites();
        provenance_replays();
        delete_sampling_is_uniform();
        copy_and_swap_sampling_is_uniform_over_pairs();
        uncovered_branch_sites_are_never_sampled();
    }
}

const REPAIR_SEED: u64 = 1;
const SWEEP_SEED: u64 = 1;

fn criterion(n: u32, name: &str, budget: Duration, body: impl FnOnce() -> String) {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(body));
    let took = start.elapsed();
    let (ok, detail) = match &result {
        Ok(d) if took <= budget => (true, d.clone()),
        Ok(d) => (false, format!("{d}; over budget")),
        Err(p) => (
            false,
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default(),
        ),
    };
    let line = format!(
        "criterion {n} ({name}): {} [{:.1}s of {}s] {detail}\n",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        budget.as_secs()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{}", line.trim_end());
}

fn hermetic(c: Comparator) -> HermeticEvaluator {
    HermeticEvaluator::new(corpus::sorting_suite(c), Limits::default())
}

fn exact_mutrb(name: &str, c: Comparator) -> RobustnessReport {
    let g = corpus::sorter_genome(name).unwrap();
    exhaustive_mutrb(&g, &hermetic(c), DEFAULT_EXHAUSTIVE_CAP).unwrap().report
}

#[test]
fn criterion_1_formula_fidelity() {
    criterion(1, "formula fidelity", Duration::from_secs(1), || {
        let path = common::root().join("corpus/fixtures/replay_10_3.json");
        let f: MutrbFixture = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let r = replay_mutrb(&f);
        assert_eq!((r.pooled_unique, r.pooled_neutral), (10, 3));
        let s = format_float(r.pooled_mutrb);
        assert_eq!(s, "0.300000");
        format!("pooled {s}")
    });
}

#[test]
fn criterion_2_oracle_equivalence() {
    criterion(2, "oracle equivalence", Duration::from_secs(120), || {
        let g = corpus::sorter_genome("bubble").unwrap();
        let ev = hermetic(Comparator::Exact);
        let exact = exhaustive_mutrb(&g, &ev, DEFAULT_EXHAUSTIVE_CAP).unwrap().report;
        assert_eq!(exact.coverage_fraction, 1.0);
        let hits = (1..=10u64)
            .filter(|&seed| {
                let r = estimate_mutrb(&g, &ev, 200, seed).unwrap();
                (r.pooled_mutrb - exact.pooled_mutrb).abs() <= r.ci95
            })
            .count();
        assert!(hits >= 9, "{hits}/10 intervals cover {}", exact.pooled_mutrb);
        format!("{hits}/10 intervals cover exact {}", format_float(exact.pooled_mutrb))
    });
}

#[test]
fn criterion_3_nonzero_robustness() {
    criterion(3, "nonzero robustness under full coverage", Duration::from_secs(300), || {
        let mut parts = Vec::new();
        for (name, _) in corpus::SORTERS {
            let r = exact_mutrb(name, Comparator::Exact);
            assert_eq!(r.coverage_fraction, 1.0, "{name}");
            assert!(r.pooled_mutrb > 0.0, "{name}");
            parts.push(format!("{name} {}", format_float(r.pooled_mutrb)));
        }
        parts.join(", ")
    });
}

#[test]
fn criterion_4_comparator_monotonicity() {
    criterion(4, "comparator monotonicity", Duration::from_secs(300), || {
        let [e, w, c] = Comparator::ALL.map(|c| exact_mutrb("bubble", c));
        assert_eq!(e.pooled_unique, w.pooled_unique);
        assert_eq!(e.pooled_unique, c.pooled_unique);
        assert!(c.pooled_mutrb >= w.pooled_mutrb && w.pooled_mutrb >= e.pooled_mutrb);
        assert!(c.pooled_mutrb > e.pooled_mutrb);
        format!(
            "crash-only {} >= whitespace {} >= exact {}",
            format_float(c.pooled_mutrb),
            format_float(w.pooled_mutrb),
            format_float(e.pooled_mutrb)
        )
    });
}

#[test]
fn criterion_5_operator_laws() {
    criterion(5, "operator laws", Duration::from_secs(60), || {
        laws::all();
        "1000-case property suites and chi-square uniformity".to_string()
    });
}

#[test]
fn criterion_6_walk_soundness() {
    criterion(6, "walk soundness", Duration::from_secs(300), || {
        let g = corpus::sorter_genome("insertion").unwrap();
        let ev = hermetic(Comparator::Exact);
        let mut detail = Vec::new();
        for size_cap in [false, true] {
            let cfg = WalkConfig {
                population: 20,
                steps: 50,
                size_cap,
                ..WalkConfig::default()
            };
            let w = neutral_walk(&g, &ev, &cfg, 6).unwrap();
            assert_eq!(w.series.len(), 51);
            assert_eq!(w.final_population.len(), 20);
            for v in &w.final_population {
                assert_eq!(v.provenance.len(), 50);
                assert!(ev.evaluate(&v.genome).is_neutral());
                assert_eq!(Variant::replay(&g, &v.provenance).unwrap(), v.genome);
                if size_cap {
                    assert!(v.genome.site_count() <= g.site_count());
                }
            }
            if size_cap {
                assert!(w.series.iter().all(|s| s.max_size <= g.site_count()));
            }
            let last = w.series.last().unwrap();
            detail.push(format!(
                "cap {size_cap}: mean size {} max {}",
                format_float(last.mean_size),
                last.max_size
            ));
        }
        detail.join("; ")
    });
}

#[test]
fn criterion_7_repair_witness() {
    criterion(7, "proactive repair witness", Duration::from_secs(180), || {
        let t = corpus::sorter("bubble").unwrap();
        let suite = corpus::sorting_suite(Comparator::Exact);
        let lim = Limits::default();
        let seeded = seed_defects(&t, &suite, &lim, 1, &SeedConfig::only(DefectClass::ExtraStatement), 5).unwrap();
        let defect = &seeded.defects()[0];
        assert_eq!(defect.class, DefectClass::ExtraStatement);
        let buggy = Genome::Tree(seeded.buggy().clone());
        let ev = hermetic(Comparator::Exact);
        assert!(ev.coverage(&buggy).unwrap().count(defect.site) > 0);

        let ex = proactive_repair(&buggy, &ev, seeded.defects(), usize::MAX, GenerationMode::ExhaustiveFirstOrder, &lim, REPAIR_SEED)
            .unwrap();
        assert!(ex.unique_bugs_fixed >= 1);
        assert!(ex.repairs.iter().any(|r| r.mutation.kind == MutationKind::Delete
            && r.mutation.target == defect.site
            && r.fixed[0].locality == Locality::SameLine));

        let sampled = proactive_repair(&buggy, &ev, seeded.defects(), 500, GenerationMode::Sampled, &lim, REPAIR_SEED).unwrap();
        assert_eq!(sampled.fixed_defects, vec![0]);
        assert!(sampled.same_line >= 1);

        let dummies: Vec<DefectSpec> = seeded
            .defects()
            .iter()
            .map(|d| DefectSpec {
                held_out: TestCase::new("dummy", "", "nothing"),
                ..d.clone()
            })
            .collect();
        for (mode, n, real) in [
            (GenerationMode::ExhaustiveFirstOrder, usize::MAX, &ex),
            (GenerationMode::Sampled, 500, &sampled),
        ] {
            let blind = proactive_repair(&buggy, &ev, &dummies, n, mode, &lim, REPAIR_SEED).unwrap();
            assert_eq!(blind.variant_set_digest, real.variant_set_digest);
            assert_eq!(blind.variant_digests, real.variant_digests);
        }
        let held = TestSuite::new(vec![defect.held_out.clone()], Comparator::Exact).unwrap();
        assert!(!evaluate(&buggy, &held, &lim).is_neutral());
        format!(
            "exhaustive: {} repairing variants of {}, sampled: {} of {} ({} same-line)",
            ex.bug_fix_variants, ex.variants_generated, sampled.bug_fix_variants, sampled.variants_generated, sampled.same_line
        )
    });
}

#[test]
fn criterion_8_sweep_direction() {
    criterion(8, "sweep direction", Duration::from_secs(600), || {
        let t = corpus::sorter("bubble").unwrap();
        let suite = corpus::sorting_suite(Comparator::Exact);
        let ns: Vec<usize> = (1..=8).collect();
        let r = seeded_bug_sweep(&t, &suite, &Limits::default(), &ns, 200, &SeedConfig::default(), SWEEP_SEED).unwrap();
        let rho = r.pearson_r.expect("bugs fixed vary with n");
        assert!(rho > 0.0, "r = {rho}");
        let fixed: Vec<String> = r.points.iter().map(|p| p.bugs_fixed.to_string()).collect();
        format!("r = {} (fixed {})", format_float(rho), fixed.join(" "))
    });
}

#[test]
fn criterion_9_determinism() {
    criterion(9, "determinism across runs and workers", Duration::from_secs(300), || {
        let d = tempdir().unwrap();
        let runs: [(&str, &str, &[&str]); 7] = [
            ("measure", "bubble.mini", &["--per-op-samples", "100"]),
            ("exhaustive", "bubble.mini", &[]),
            ("coverage", "bubble.lin", &[]),
            ("walk", "insertion.mini", &["--population", "6", "--steps", "6"]),
            ("seed-bugs", "bubble.mini", &["--n-defects", "3"]),
            ("repair", "bubble.mini", &["--n-defects", "2", "--n-variants", "300"]),
            ("sweep", "insertion.mini", &["--n-values", "1,2,3", "--n-variants", "40"]),
        ];
        for (cmd, target, rest) in runs {
            let mut outputs = Vec::new();
            for (i, jobs) in ["1", "1", "8"].into_iter().enumerate() {
                let out = format!("{cmd}-{i}.json");
                let mut args = vec!["--seed", "13", "--jobs", jobs, "--output", &out];
                args.extend_from_slice(rest);
                let r = common::run_sorter(d.path(), cmd, target, &args);
                assert_eq!(r.code, 0, "{cmd}: {}", r.stderr);
                let path: PathBuf = d.path().join(&out);
                let csv = std::fs::read(path.with_extension("csv")).ok();
                outputs.push((std::fs::read(&path).unwrap(), csv));
            }
            assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{cmd} output differs");
        }
        "7 subcommands byte-identical at jobs 1, 1, 8".to_string()
    });
}
