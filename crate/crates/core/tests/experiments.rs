use std::path::PathBuf;

use mutrb_core::corpus;
use mutrb_core::experiments::replay::{
    replay_mutrb, replay_repair_table, replay_sweep_correlation, MutrbFixture, RepairTableFixture, SweepFixture,
};
use mutrb_core::experiments::*;
use mutrb_core::genome::{Genome, MutationKind, Variant};
use mutrb_core::harness::{evaluate, Comparator, Evaluator, HermeticEvaluator, TestCase};
use mutrb_core::minilang::Limits;
use mutrb_core::report::format_float;

fn fixture<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/fixtures").join(name);
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn hermetic(c: Comparator) -> HermeticEvaluator {
    HermeticEvaluator::new(corpus::sorting_suite(c), Limits::default())
}

fn exhaustive(name: &str, c: Comparator) -> RobustnessReport {
    let g = corpus::sorter_genome(name).unwrap();
    exhaustive_mutrb(&g, &hermetic(c), DEFAULT_EXHAUSTIVE_CAP).unwrap().report
}

fn tallies(r: &RobustnessReport) -> Vec<(usize, usize)> {
    MutationKind::ALL
        .iter()
        .map(|k| {
            let o = &r.per_operator[k.name()];
            (o.unique_mutants, o.neutral)
        })
        .collect()
}

#[test]
fn exhaustive_goldens() {
    let goldens = [
        ("bubble", [(1814, 1193), (45, 13), (913, 104)]),
        ("insertion", [(312, 127), (19, 2), (153, 7)]),
        ("merge", [(1031, 618), (34, 3), (498, 16)]),
        ("quick", [(1196, 697), (36, 4), (572, 24)]),
    ];
    for (name, want) in goldens {
        let r = exhaustive(name, Comparator::Exact);
        assert_eq!(tallies(&r), want.to_vec(), "{name}");
        assert_eq!(r.coverage_fraction, 1.0);
        let (u, n) = want.iter().fold((0, 0), |(u, n), (a, b)| (u + a, n + b));
        assert!((r.pooled_mutrb - n as f64 / u as f64).abs() < 1e-12);
        assert!(r.pooled_mutrb > 0.0);
    }
}

#[test]
fn looser_comparators_accept_more() {
    for (name, _) in corpus::SORTERS {
        let [e, w, c] = Comparator::ALL.map(|c| exhaustive(name, c));
        assert_eq!(e.pooled_unique, c.pooled_unique);
        assert!(c.pooled_mutrb >= w.pooled_mutrb && w.pooled_mutrb >= e.pooled_mutrb, "{name}");
        assert!(c.pooled_mutrb > e.pooled_mutrb, "{name}");
    }
}

#[test]
fn estimator_interval_covers_exact_value() {
    let g = corpus::sorter_genome("bubble").unwrap();
    let ev = hermetic(Comparator::Exact);
    let exact = exhaustive_mutrb(&g, &ev, DEFAULT_EXHAUSTIVE_CAP).unwrap().report.pooled_mutrb;
    let hits = (0..100u64)
        .filter(|&seed| {
            let r = estimate_mutrb(&g, &ev, 50, 1000 + seed).unwrap();
            (r.pooled_mutrb - exact).abs() <= r.ci95
        })
        .count();
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn estimate_converges_when_sampling_the_whole_space() {
    let g = corpus::sorter_genome("insertion").unwrap();
    let ev = hermetic(Comparator::Exact);
    let exact = exhaustive_mutrb(&g, &ev, DEFAULT_EXHAUSTIVE_CAP).unwrap().report;
    let r = estimate_mutrb(&g, &ev, 1_000_000, 3).unwrap();
    assert!((r.pooled_mutrb - exact.pooled_mutrb).abs() < 1e-12);
    assert_eq!(r.ci95, 0.0);
}

#[test]
fn walk_members_stay_neutral_with_full_provenance() {
    let g = corpus::sorter_genome("bubble").unwrap();
    let ev = hermetic(Comparator::Exact);
    let cfg = WalkConfig {
        population: 5,
        steps: 3,
        ..WalkConfig::default()
    };
    let w = neutral_walk(&g, &ev, &cfg, 11).unwrap();
    assert_eq!(w.series.len(), 4);
    assert_eq!(w.final_population.len(), 5);
    for v in &w.final_population {
        assert_eq!(v.provenance.len(), 3);
        assert!(ev.evaluate(&v.genome).is_neutral());
        assert_eq!(Variant::replay(&g, &v.provenance).unwrap(), v.genome);
    }
    assert_eq!(w, neutral_walk(&g, &ev, &cfg, 11).unwrap());
}

#[test]
fn zero_step_walk_reports_the_original() {
    let g = corpus::sorter_genome("merge").unwrap();
    let cfg = WalkConfig {
        population: 3,
        steps: 0,
        ..WalkConfig::default()
    };
    let w = neutral_walk(&g, &hermetic(Comparator::Exact), &cfg, 1).unwrap();
    assert_eq!(w.series.len(), 1);
    assert_eq!(w.series[0].mean_size, g.size() as f64);
}

#[test]
fn capped_walk_never_grows() {
    let g = corpus::sorter_genome("insertion").unwrap();
    let cfg = WalkConfig {
        population: 6,
        steps: 8,
        size_cap: true,
        ..WalkConfig::default()
    };
    let w = neutral_walk(&g, &hermetic(Comparator::Exact), &cfg, 2).unwrap();
    assert!(w.series.iter().all(|s| s.max_size <= g.size()));
}

fn witness() -> Seeded {
    let g = corpus::sorter("bubble").unwrap();
    let suite = corpus::sorting_suite(Comparator::Exact);
    seed_defects(
        &g,
        &suite,
        &Limits::default(),
        1,
        &SeedConfig::only(DefectClass::ExtraStatement),
        5,
    )
    .unwrap()
}

#[test]
fn seeded_defects_hold_their_contract() {
    let g = corpus::sorter("bubble").unwrap();
    let suite = corpus::sorting_suite(Comparator::Exact);
    let lim = Limits::default();
    let s = seed_defects(&g, &suite, &lim, 4, &SeedConfig::default(), 21).unwrap();
    assert_eq!(s.defects().len(), 4);
    let orig = Genome::Tree(g);
    for (k, stage) in s.stages.iter().enumerate().skip(1) {
        let prog = Genome::Tree(stage.program.clone());
        assert!(evaluate(&prog, &suite, &lim).is_neutral());
        for d in &stage.defects {
            let held = mutrb_core::harness::TestSuite::new(vec![d.held_out.clone()], Comparator::Exact).unwrap();
            assert!(evaluate(&orig, &held, &lim).is_neutral(), "stage {k}");
            assert!(!evaluate(&prog, &held, &lim).is_neutral(), "stage {k}");
        }
    }
}

#[test]
fn exhaustive_repair_finds_the_same_line_fix() {
    let s = witness();
    let buggy = Genome::Tree(s.buggy().clone());
    let ev = hermetic(Comparator::Exact);
    let lim = Limits::default();
    let r = proactive_repair(
        &buggy,
        &ev,
        s.defects(),
        usize::MAX,
        GenerationMode::ExhaustiveFirstOrder,
        &lim,
        1,
    )
    .unwrap();
    assert!(r.unique_bugs_fixed >= 1);
    assert!(r.same_line >= 1);
    let fix = r
        .repairs
        .iter()
        .find(|rep| rep.mutation.kind == MutationKind::Delete && rep.mutation.target == s.defects()[0].site)
        .expect("deleting the inserted statement repairs it");
    assert_eq!(fix.fixed[0].locality, Locality::SameLine);
    for rep in &r.repairs {
        let v = buggy.apply(&rep.mutation).unwrap();
        assert!(ev.evaluate(&v).is_neutral());
        for f in &rep.fixed {
            let held = mutrb_core::harness::TestSuite::new(vec![s.defects()[f.defect].held_out.clone()], Comparator::Exact)
                .unwrap();
            assert!(evaluate(&v, &held, &lim).is_neutral());
        }
    }
}

#[test]
fn variant_generation_is_blind_to_held_out_tests() {
    let s = witness();
    let buggy = Genome::Tree(s.buggy().clone());
    let ev = hermetic(Comparator::Exact);
    let lim = Limits::default();
    let dummies: Vec<DefectSpec> = s
        .defects()
        .iter()
        .map(|d| DefectSpec {
            held_out: TestCase::new("dummy", "", "nothing"),
            ..d.clone()
        })
        .collect();
    for mode in [GenerationMode::Sampled, GenerationMode::ExhaustiveFirstOrder] {
        let real = proactive_repair(&buggy, &ev, s.defects(), 300, mode, &lim, 9).unwrap();
        let fake = proactive_repair(&buggy, &ev, &dummies, 300, mode, &lim, 9).unwrap();
        assert_eq!(real.variant_set_digest, fake.variant_set_digest);
        assert_eq!(real.variant_digests, fake.variant_digests);
        assert_eq!(fake.unique_bugs_fixed, 0);
    }
}

#[test]
fn replay_ten_unique_three_neutral() {
    let r = replay_mutrb(&fixture::<MutrbFixture>("replay_10_3.json"));
    assert_eq!((r.pooled_unique, r.pooled_neutral, r.duplicates), (10, 3, 1));
    assert_eq!(format_float(r.pooled_mutrb), "0.300000");
}

#[test]
fn replay_bubble_sort_tallies() {
    let ast = replay_mutrb(&fixture::<MutrbFixture>("bubble_ast_tallies.json"));
    let asm = replay_mutrb(&fixture::<MutrbFixture>("bubble_asm_tallies.json"));
    assert_eq!(format!("{:.1}", ast.pooled_mutrb * 100.0), "27.3");
    assert_eq!(format!("{:.1}", asm.pooled_mutrb * 100.0), "25.7");
}

#[test]
fn replay_repair_table_means() {
    let r = replay_repair_table(&fixture::<RepairTableFixture>("repair_table.json"));
    assert_eq!(r.programs, 11);
    assert_eq!(format!("{:.1}", r.mean_fixes), "18.8");
    assert!((r.mean_bugs_fixed - 12.0 / 11.0).abs() < 1e-12);
    assert_eq!(format!("{:.0}", r.mean_bugs_fixed), "1");
}

#[test]
fn replay_potion_sweep_correlation() {
    let f = fixture::<SweepFixture>("potion_sweep.json");
    let r = replay_sweep_correlation(&f).unwrap();
    assert!((r - 0.95).abs() <= 0.02, "{r}");
    assert!(f.variants_needed[..2].iter().all(Option::is_none));
}
