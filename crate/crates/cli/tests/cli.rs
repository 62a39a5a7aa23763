mod common;

use common::*;
use mutrb_core::corpus;
use mutrb_core::experiments::{exhaustive_mutrb, DEFAULT_EXHAUSTIVE_CAP};
use mutrb_core::harness::{Comparator, HermeticEvaluator};
use mutrb_core::minilang::Limits;
use serde_json::Value;
use tempfile::tempdir;

#[test]
fn minimal_flags_fill_in_defaults() {
    let d = tempdir().unwrap();
    let r = run_sorter(d.path(), "measure", "bubble.mini", &["--seed", "7"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("pooled MutRB"), "{}", r.stdout);
    let env = read_json(&d.path().join("measure.json"));
    check_schema("measure", &env).unwrap();
    assert_eq!(env["seed"], 7);
    assert_eq!(env["config"]["per_op_samples"], 200);
    assert_eq!(env["config"]["comparator"], "exact");
    assert_eq!(env["config"]["walk"]["population"], 100);
    assert_eq!(env["config"]["limits"]["max_steps"], 100_000);
}

#[test]
fn measure_agrees_with_the_exhaustive_oracle() {
    let d = tempdir().unwrap();
    let r = run_sorter(d.path(), "measure", "bubble.mini", &["--seed", "7", "--output", "m.json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = read_json(&d.path().join("m.json"))["report"].clone();
    let g = corpus::sorter_genome("bubble").unwrap();
    let ev = HermeticEvaluator::new(corpus::sorting_suite(Comparator::Exact), Limits::default());
    let exact = exhaustive_mutrb(&g, &ev, DEFAULT_EXHAUSTIVE_CAP).unwrap().report;
    let ops: Vec<&String> = m["per_operator"].as_object().unwrap().keys().collect();
    assert_eq!(ops, ["copy", "delete", "swap"]);
    for (name, stats) in &exact.per_operator {
        assert_eq!(m["per_operator"][name]["eligible"], stats.eligible);
    }
    let pooled = m["pooled_mutrb"].as_f64().unwrap();
    let ci = m["ci95"].as_f64().unwrap();
    assert!(ci > 0.0);
    assert!((pooled - exact.pooled_mutrb).abs() <= ci, "{pooled} ± {ci} vs {}", exact.pooled_mutrb);
}

#[test]
fn exhaustive_report_is_the_library_value() {
    let d = tempdir().unwrap();
    let r = run_sorter(d.path(), "exhaustive", "insertion.mini", &["--seed", "1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let env = read_json(&d.path().join("exhaustive.json"));
    check_schema("exhaustive", &env).unwrap();
    let g = corpus::sorter_genome("insertion").unwrap();
    let ev = HermeticEvaluator::new(corpus::sorting_suite(Comparator::Exact), Limits::default());
    let lib = exhaustive_mutrb(&g, &ev, DEFAULT_EXHAUSTIVE_CAP).unwrap().report;
    let lib: Value = serde_json::from_str(&mutrb_core::report::to_canonical_json(&lib).unwrap()).unwrap();
    assert_eq!(env["report"], lib);
}

#[test]
fn zero_samples_in_a_file_is_a_config_error() {
    let d = tempdir().unwrap();
    std::fs::write(d.path().join("c.toml"), "seed = 3\nper_op_samples = 0\n").unwrap();
    let r = run_sorter(d.path(), "measure", "bubble.mini", &["--config", "c.toml"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("per_op_samples"), "{}", r.stderr);
    assert!(!d.path().join("measure.json").exists());
}

#[test]
fn flag_seed_beats_file_seed() {
    let d = tempdir().unwrap();
    std::fs::write(d.path().join("c.toml"), "seed = 1\nper_op_samples = 20\n").unwrap();
    let r = run_sorter(d.path(), "measure", "bubble.mini", &["--config", "c.toml", "--seed", "9"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let env = read_json(&d.path().join("measure.json"));
    assert_eq!(env["seed"], 9);
    assert_eq!(env["config"]["per_op_samples"], 20);
}

#[test]
fn config_errors_exit_two() {
    let d = tempdir().unwrap();
    std::fs::write(d.path().join("typo.toml"), "sede = 1\n").unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (sorter_args("measure", "bubble.mini", &[]), "seed"),
        (sorter_args("measure", "bubble.mini", &["--config", "typo.toml", "--seed", "1"]), "sede"),
        (sorter_args("measure", "missing.mini", &["--seed", "1"]), "missing.mini"),
        (sorter_args("walk", "bubble.mini", &["--seed", "1", "--population", "0"]), "walk.population"),
        (sorter_args("measure", "bubble.mini", &["--seed", "1", "--output", "no/such/dir/x.json"]), "no/such/dir"),
        (sorter_args("repair", "bubble.lin", &["--seed", "1"]), "tree"),
        (vec!["measure".into(), "--target".into(), corpus("bubble.mini"), "--seed".into(), "1".into()], "suite"),
    ];
    for (args, needle) in cases {
        let r = mutrb(d.path(), &args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert!(r.stderr.contains(needle), "{args:?}: {}", r.stderr);
    }
}

#[test]
fn broken_target_exits_three_without_a_report() {
    let d = tempdir().unwrap();
    std::fs::write(d.path().join("broken.mini"), "read x; print x + 1;\n").unwrap();
    for cmd in ["measure", "exhaustive", "coverage", "walk", "repair"] {
        let r = mutrb(
            d.path(),
            &[cmd, "--target", "broken.mini", "--suite", &corpus("tests"), "--seed", "1"],
        );
        assert_eq!(r.code, 3, "{cmd}: {}", r.stderr);
        assert!(!d.path().join(format!("{cmd}.json")).exists());
    }
}

#[test]
fn stalled_walk_exits_four_with_its_partial_series() {
    let d = tempdir().unwrap();
    let suite = d.path().join("one");
    std::fs::create_dir(&suite).unwrap();
    std::fs::write(suite.join("a.in"), "5\n").unwrap();
    std::fs::write(suite.join("a.out"), "5 ").unwrap();
    std::fs::write(d.path().join("p.mini"), "read x;\nprint x;\n").unwrap();
    let r = mutrb(
        d.path(),
        &["walk", "--target", "p.mini", "--suite", "one", "--seed", "1", "--population", "2", "--steps", "3"],
    );
    assert_eq!(r.code, 4, "{}", r.stderr);
    let env = read_json(&d.path().join("walk.json"));
    check_schema("walk", &env).unwrap();
    assert_eq!(env["report"]["stalled_at_step"], 1);
    assert_eq!(env["report"]["series"].as_array().unwrap().len(), 1);
    assert!(d.path().join("walk.csv").exists());
}

#[test]
fn every_report_matches_its_schema() {
    let d = tempdir().unwrap();
    let runs: [(&str, &str, &[&str]); 6] = [
        ("coverage", "bubble.lin", &[]),
        ("walk", "merge.mini", &["--population", "3", "--steps", "2"]),
        ("seed-bugs", "insertion.mini", &["--n-defects", "2"]),
        ("repair", "insertion.mini", &["--n-defects", "1", "--n-variants", "40"]),
        ("sweep", "insertion.mini", &["--n-values", "1,2", "--n-variants", "20"]),
        ("measure", "bubble.lin", &["--per-op-samples", "30"]),
    ];
    for (cmd, target, rest) in runs {
        let mut args = vec!["--seed", "4"];
        args.extend_from_slice(rest);
        let r = run_sorter(d.path(), cmd, target, &args);
        assert_eq!(r.code, 0, "{cmd}: {}", r.stderr);
        let env = read_json(&d.path().join(format!("{cmd}.json")));
        check_schema(cmd, &env).unwrap_or_else(|e| panic!("{cmd}: {e}"));
        assert_eq!(env["schema"], format!("mutrb.{cmd}/1"));
    }
    let csv = std::fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("n_seeded,bugs_fixed,variants_needed\n"));
}

#[test]
fn sweep_is_repeatable() {
    let d = tempdir().unwrap();
    let args = ["--seed", "2", "--n-values", "1,3", "--n-variants", "25"];
    let a = run_sorter(d.path(), "sweep", "insertion.mini", &[&args[..], &["--output", "a.json"]].concat());
    let b = run_sorter(d.path(), "sweep", "insertion.mini", &[&args[..], &["--output", "b.json"]].concat());
    assert_eq!((a.code, b.code), (0, 0), "{}", a.stderr);
    let read = |n: &str| std::fs::read(d.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("a.csv"), read("b.csv"));
}
