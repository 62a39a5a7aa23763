//! Defect seeding. Each defect keeps the visible suite passing and comes
//! with a held-out test that exposes it.

use std::collections::HashSet;
use std::fmt;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tag, ExperimentError};
use crate::genome::{
    insertion_point, print_tree, sample_mutation, Expr, Genome, LineSpan, Mutation, MutationKind, SiteId, Stmt,
    TreeGenome,
};
use crate::harness::{evaluate, TestCase, TestSuite};
use crate::minilang::{coverage_of, ExecStatus, Executable, Limits};
use crate::rng::rng_for;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectClass {
    MissingConditionalClause,
    ExtraStatement,
    ConstantForVariable,
    WrongParameter,
}

impl DefectClass {
    pub const ALL: [DefectClass; 4] = [
        DefectClass::MissingConditionalClause,
        DefectClass::ExtraStatement,
        DefectClass::ConstantForVariable,
        DefectClass::WrongParameter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DefectClass::MissingConditionalClause => "missing-conditional-clause",
            DefectClass::ExtraStatement => "extra-statement",
            DefectClass::ConstantForVariable => "constant-for-variable",
            DefectClass::WrongParameter => "wrong-parameter",
        }
    }
}

impl fmt::Display for DefectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DefectSpec {
    pub class: DefectClass,
    /// Statement carrying the defect, in the program the spec belongs to.
    pub site: SiteId,
    /// Seeded lines: the header line for expression defects, the whole
    /// statement for an inserted one.
    pub lines: LineSpan,
    pub description: String,
    pub held_out: TestCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    /// Relative class frequencies, in [`DefectClass::ALL`] order.
    pub class_weights: [f64; 4],
    /// Candidate defects tried before giving up on one placement.
    pub attempts_per_defect: usize,
    /// Input vectors enumerated in order before switching to random search.
    pub exhaustive_inputs: usize,
    pub random_inputs: usize,
    pub max_input_len: usize,
    pub min_value: i64,
    pub max_value: i64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            class_weights: [1.0; 4],
            attempts_per_defect: 2000,
            exhaustive_inputs: 20_000,
            random_inputs: 10_000,
            max_input_len: 6,
            min_value: -9,
            max_value: 9,
        }
    }
}

impl SeedConfig {
    pub fn only(class: DefectClass) -> Self {
        SeedConfig {
            class_weights: DefectClass::ALL.map(|k| if k == class { 1.0 } else { 0.0 }),
            ..SeedConfig::default()
        }
    }
}

/// The program after `k` defects, with those defects located in it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    #[serde(serialize_with = "ser_tree")]
    pub program: TreeGenome,
    pub defects: Vec<DefectSpec>,
}

fn ser_tree<S: serde::Serializer>(t: &TreeGenome, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&print_tree(t))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Seeded {
    /// `stages[k]` carries the first `k` defects; `stages[0]` is the original.
    pub stages: Vec<Stage>,
}

impl Seeded {
    pub fn original(&self) -> &TreeGenome {
        &self.stages[0].program
    }

    pub fn buggy(&self) -> &TreeGenome {
        &self.stages.last().expect("stage 0 always exists").program
    }

    pub fn defects(&self) -> &[DefectSpec] {
        &self.stages.last().expect("stage 0 always exists").defects
    }
}

#[derive(Clone, Debug)]
enum Action {
    KeepLeft,
    KeepRight,
    Literal(i64),
    Variable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    Logical,
    Var,
    Lit,
}

impl Node {
    fn matches(self, e: &Expr) -> bool {
        match self {
            Node::Logical => matches!(e, Expr::Binary(op, ..) if op.is_logical()),
            Node::Var => matches!(e, Expr::Var(_)),
            Node::Lit => matches!(e, Expr::Lit(_)),
        }
    }
}

#[derive(Clone, Debug)]
struct ExprEdit {
    site: SiteId,
    node: Node,
    nth: usize,
    action: Action,
}

struct Candidate {
    class: DefectClass,
    program: TreeGenome,
    site: SiteId,
    /// Inserted subtree, for shifting the ids of earlier defects.
    inserted: Option<(SiteId, usize)>,
}

fn occurrences(s: &Stmt, node: Node) -> Vec<&Expr> {
    let mut out = Vec::new();
    for e in s.own_exprs() {
        e.visit(&mut |x| {
            if node.matches(x) {
                out.push(x);
            }
        });
    }
    out
}

fn apply_expr_edit(g: &TreeGenome, edit: &ExprEdit) -> Option<TreeGenome> {
    let mut out = g.clone();
    let stmt = out.stmt_mut(edit.site)?;
    let mut n = edit.nth;
    let pred = |e: &Expr| edit.node.matches(e);
    let mut f = |e: &Expr| match (&edit.action, e) {
        (Action::KeepLeft, Expr::Binary(_, l, _)) => (**l).clone(),
        (Action::KeepRight, Expr::Binary(_, _, r)) => (**r).clone(),
        (Action::Literal(v), _) => Expr::Lit(*v),
        (Action::Variable(name), _) => Expr::Var(name.clone()),
        _ => e.clone(),
    };
    let mut done = false;
    for e in stmt.own_exprs_mut() {
        if e.rewrite_nth(&pred, &mut n, &mut f) {
            done = true;
            break;
        }
    }
    (done && out != *g).then_some(out)
}

fn expr_edits(g: &TreeGenome, class: DefectClass) -> Vec<ExprEdit> {
    let scalars = g.scalar_names();
    let mut edits = Vec::new();
    for id in 0..g.site_count() {
        let site = SiteId(id);
        let s = g.stmt(site).expect("site in range");
        match class {
            DefectClass::MissingConditionalClause => {
                if !matches!(s, Stmt::If { .. } | Stmt::While { .. }) {
                    continue;
                }
                for nth in 0..occurrences(s, Node::Logical).len() {
                    for action in [Action::KeepLeft, Action::KeepRight] {
                        edits.push(ExprEdit {
                            site,
                            node: Node::Logical,
                            nth,
                            action,
                        });
                    }
                }
            }
            DefectClass::ConstantForVariable => {
                let mut lits: Vec<i64> = occurrences(s, Node::Lit)
                    .iter()
                    .filter_map(|e| match e {
                        Expr::Lit(v) => Some(*v),
                        _ => None,
                    })
                    .collect();
                lits.sort_unstable();
                lits.dedup();
                for nth in 0..occurrences(s, Node::Var).len() {
                    for v in &lits {
                        edits.push(ExprEdit {
                            site,
                            node: Node::Var,
                            nth,
                            action: Action::Literal(*v),
                        });
                    }
                }
            }
            DefectClass::WrongParameter => {
                for (nth, e) in occurrences(s, Node::Lit).into_iter().enumerate() {
                    if let Expr::Lit(v) = e {
                        for d in [-1, 1] {
                            if let Some(w) = v.checked_add(d) {
                                edits.push(ExprEdit {
                                    site,
                                    node: Node::Lit,
                                    nth,
                                    action: Action::Literal(w),
                                });
                            }
                        }
                    }
                }
                for (nth, e) in occurrences(s, Node::Var).into_iter().enumerate() {
                    if let Expr::Var(name) = e {
                        for other in scalars.iter().filter(|o| *o != name) {
                            edits.push(ExprEdit {
                                site,
                                node: Node::Var,
                                nth,
                                action: Action::Variable(other.clone()),
                            });
                        }
                    }
                }
            }
            DefectClass::ExtraStatement => {}
        }
    }
    edits
}

fn propose(
    g: &TreeGenome,
    suite: &TestSuite,
    limits: &Limits,
    class: DefectClass,
    rng: &mut impl Rng,
) -> Option<Candidate> {
    if class == DefectClass::ExtraStatement {
        let genome = Genome::Tree(g.clone());
        let cov = coverage_of(&genome, suite, limits).ok()?;
        let m: Mutation = sample_mutation(&genome, &cov, MutationKind::Copy, rng).ok()?;
        let at = insertion_point(&genome, &m)?;
        let Genome::Tree(program) = genome.apply(&m).ok()? else {
            return None;
        };
        let size = g.stmt(m.source?)?.size();
        return Some(Candidate {
            class,
            program,
            site: at,
            inserted: Some((at, size)),
        });
    }
    let edits = expr_edits(g, class);
    let edit = edits.choose(rng)?;
    Some(Candidate {
        class,
        program: apply_expr_edit(g, edit)?,
        site: edit.site,
        inserted: None,
    })
}

type Observed = (ExecStatus, String);

fn observe(exe: &Executable, input: &str, limits: &Limits) -> Observed {
    let e = exe.run(input, limits);
    (e.status, e.output)
}

/// Input vectors of length 0, 1, ... in lexicographic order.
struct Lexicographic {
    values: Vec<i64>,
    digits: Vec<usize>,
    max_len: usize,
    started: bool,
}

impl Iterator for Lexicographic {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if !self.started {
            self.started = true;
        } else {
            let base = self.values.len();
            let mut i = self.digits.len();
            loop {
                if i == 0 {
                    if self.digits.len() == self.max_len {
                        return None;
                    }
                    self.digits = vec![0; self.digits.len() + 1];
                    break;
                }
                i -= 1;
                self.digits[i] += 1;
                if self.digits[i] < base {
                    break;
                }
                self.digits[i] = 0;
            }
        }
        Some(self.digits.iter().map(|&d| self.values[d]).collect())
    }
}

fn render(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

/// A held-out candidate input with the original's output and a step budget
/// generous enough for any sane variant.
struct Probe {
    input: String,
    want: String,
    limits: Limits,
}

/// The held-out input pool with the original's behaviour on each input.
struct Search<'a> {
    limits: &'a Limits,
    probes: Vec<Probe>,
}

impl<'a> Search<'a> {
    /// Lexicographic vectors first, then random ones; inputs on which the
    /// original does not complete are dropped.
    fn new(cfg: &SeedConfig, limits: &'a Limits, original: &Executable, rng: &mut impl Rng) -> Self {
        let values: Vec<i64> = (cfg.min_value..=cfg.max_value).collect();
        let lex = Lexicographic {
            values: values.clone(),
            digits: Vec::new(),
            max_len: cfg.max_input_len,
            started: false,
        }
        .take(cfg.exhaustive_inputs);
        let max_len = cfg.max_input_len.max(1);
        let random: Vec<Vec<i64>> = if values.is_empty() {
            Vec::new()
        } else {
            (0..cfg.random_inputs)
                .map(|_| {
                    let n = rng.gen_range(1..=max_len);
                    (0..n).map(|_| *values.choose(rng).expect("non-empty range")).collect()
                })
                .collect()
        };
        let rendered: Vec<String> = lex.chain(random).map(|v| render(&v)).collect();
        let probes = rendered
            .into_par_iter()
            .filter_map(|input| {
                let e = original.run(&input, limits);
                (e.status == ExecStatus::Completed).then(|| Probe {
                    limits: Limits {
                        max_steps: limits.max_steps.min(e.steps.saturating_mul(8).saturating_add(1000)),
                        ..*limits
                    },
                    input,
                    want: e.output,
                })
            })
            .collect();
        Search { limits, probes }
    }

    /// Pool entries on which `prev` still behaves like the original.
    fn agreeing(&self, prev: &Executable) -> Vec<usize> {
        (0..self.probes.len())
            .into_par_iter()
            .filter(|&i| {
                let p = &self.probes[i];
                observe(prev, &p.input, &p.limits) == (ExecStatus::Completed, p.want.clone())
            })
            .collect()
    }

    /// The first entry of `pool` on which `next` differs from the original.
    fn discriminate(&self, pool: &[usize], next: &Executable) -> Option<(String, String)> {
        let differs = |i: &usize| {
            let p = &self.probes[*i];
            if observe(next, &p.input, &p.limits) == (ExecStatus::Completed, p.want.clone()) {
                return false;
            }
            observe(next, &p.input, self.limits) != (ExecStatus::Completed, p.want.clone())
        };
        pool.par_iter()
            .position_first(differs)
            .map(|k| {
                let p = &self.probes[pool[k]];
                (p.input.clone(), p.want.clone())
            })
    }
}

fn header_line(t: &TreeGenome, site: SiteId) -> String {
    let span = t.spans()[site.0];
    print_tree(t)
        .lines()
        .nth(span.first - 1)
        .unwrap_or_default()
        .trim()
        .to_string()
}

/// Seeds `n` defects into `original`, one at a time. Every stage passes the
/// visible suite, every defect has a held-out test that the original passes
/// and the stage introducing it fails, and no new defect changes how the
/// program behaves on earlier held-out inputs.
pub fn seed_defects(
    original: &TreeGenome,
    suite: &TestSuite,
    limits: &Limits,
    n: usize,
    cfg: &SeedConfig,
    seed: u64,
) -> Result<Seeded, ExperimentError> {
    let g0 = Genome::Tree(original.clone());
    let v = evaluate(&g0, suite, limits);
    if !v.is_neutral() {
        return Err(ExperimentError::OriginalFails(v));
    }
    let weights = WeightedIndex::new(cfg.class_weights)
        .map_err(|e| ExperimentError::Config(format!("class_weights: {e}")))?;
    let original_exe = Executable::prepare(&g0).map_err(crate::harness::HarnessError::from)?;
    let search = Search::new(cfg, limits, &original_exe, &mut rng_for(seed, &[tag::SEED, u64::MAX]));
    let mut stages = vec![Stage {
        program: original.clone(),
        defects: Vec::new(),
    }];
    for k in 0..n {
        let prev = stages.last().expect("non-empty").clone();
        let prev_exe = Executable::prepare(&Genome::Tree(prev.program.clone()))
            .map_err(crate::harness::HarnessError::from)?;
        let mut rng = rng_for(seed, &[tag::SEED, k as u64]);
        let pool = search.agreeing(&prev_exe);
        let mut placed = None;
        let mut rejected = HashSet::from([Genome::Tree(prev.program.clone()).canonical_key()]);
        for _ in 0..cfg.attempts_per_defect {
            let class = DefectClass::ALL[weights.sample(&mut rng)];
            let Some(c) = propose(&prev.program, suite, limits, class, &mut rng) else {
                continue;
            };
            let genome = Genome::Tree(c.program.clone());
            if !rejected.insert(genome.canonical_key()) {
                continue;
            }
            if !evaluate(&genome, suite, limits).is_neutral() {
                continue;
            }
            let Ok(exe) = Executable::prepare(&genome) else {
                continue;
            };
            let keeps_earlier = prev.defects.iter().all(|d| {
                observe(&prev_exe, &d.held_out.input, limits) == observe(&exe, &d.held_out.input, limits)
            });
            if !keeps_earlier {
                continue;
            }
            if let Some(found) = search.discriminate(&pool, &exe) {
                placed = Some((c, found));
                break;
            }
        }
        let Some((c, (input, expected))) = placed else {
            return Err(ExperimentError::SeedingFailed {
                placed: k,
                requested: n,
            });
        };
        let spans = c.program.spans();
        let locate = |class: DefectClass, site: SiteId| {
            if class == DefectClass::ExtraStatement {
                spans[site.0]
            } else {
                LineSpan::line(spans[site.0].first)
            }
        };
        let mut defects: Vec<DefectSpec> = prev
            .defects
            .iter()
            .map(|d| {
                let mut d = d.clone();
                if let Some((at, size)) = c.inserted {
                    if d.site >= at {
                        d.site = SiteId(d.site.0 + size);
                    }
                }
                d.lines = locate(d.class, d.site);
                d
            })
            .collect();
        let description = match c.inserted {
            Some(_) => format!("inserted `{}`", header_line(&c.program, c.site)),
            None => format!(
                "`{}` became `{}`",
                header_line(&prev.program, c.site),
                header_line(&c.program, c.site)
            ),
        };
        defects.push(DefectSpec {
            class: c.class,
            site: c.site,
            lines: locate(c.class, c.site),
            description,
            held_out: TestCase::new(format!("held_out_{}", k + 1), input, expected),
        });
        stages.push(Stage {
            program: c.program,
            defects,
        });
    }
    Ok(Seeded { stages })
}
