//! Deterministic interpreter for the mini-language, with per-statement
//! execution counts.
//!
//! Tree genomes are run by a tree-walking interpreter; linear listings are
//! assembled and run on a small stack machine. Both report traces indexed by
//! site id so that coverage can be fed straight back into mutation sampling.

mod interp;
mod listing;
mod machine;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{Genome, GenomeError, SiteId, TreeGenome};
use crate::harness::TestSuite;

pub use interp::TreeProgram;
pub use listing::{lower, AsmError, LinearProgram};
pub use machine::MAX_ARRAY_LEN;

use machine::{Abort, Machine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    pub max_steps: u64,
    pub max_output: usize,
    pub max_input_reads: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 100_000,
            max_output: 64 * 1024,
            max_input_reads: 100_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("limit `{0}` must be positive")]
pub struct LimitsError(pub &'static str);

impl Limits {
    pub fn new(max_steps: u64, max_output: usize, max_input_reads: u64) -> Result<Self, LimitsError> {
        let l = Limits {
            max_steps,
            max_output,
            max_input_reads,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<(), LimitsError> {
        if self.max_steps == 0 {
            return Err(LimitsError("max_steps"));
        }
        if self.max_output == 0 {
            return Err(LimitsError("max_output"));
        }
        if self.max_input_reads == 0 {
            return Err(LimitsError("max_input_reads"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExecStatus {
    Completed,
    StepLimit,
    RuntimeError,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub status: ExecStatus,
    /// Message for `RuntimeError`.
    pub error: Option<String>,
    pub output: String,
    /// Execution count per trace position (site id for trees, instruction
    /// index for listings).
    pub trace: Vec<u64>,
    pub steps: u64,
}

/// Visit counts per site.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMap {
    pub counts: BTreeMap<SiteId, u64>,
}

impl CoverageMap {
    pub fn count(&self, id: SiteId) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    /// Builds a map from counts listed in site order.
    pub fn from_counts(g: &Genome, counts: &[u64]) -> Self {
        let sites = g.sites();
        assert_eq!(sites.len(), counts.len(), "one count per site");
        CoverageMap {
            counts: sites.iter().map(|s| s.id).zip(counts.iter().copied()).collect(),
        }
    }

    /// Builds a map from a raw execution trace, dropping positions that are
    /// not sites (protected listing lines).
    pub fn from_trace(g: &Genome, trace: &[u64]) -> Self {
        CoverageMap {
            counts: g
                .sites()
                .iter()
                .map(|s| (s.id, trace.get(s.id.0).copied().unwrap_or(0)))
                .collect(),
        }
    }

    pub fn covered_count(&self) -> usize {
        self.counts.values().filter(|c| **c > 0).count()
    }

    /// Fraction of the map's sites with a nonzero count; 0 for an empty map.
    pub fn covered_fraction(&self) -> f64 {
        if self.counts.is_empty() {
            0.0
        } else {
            self.covered_count() as f64 / self.counts.len() as f64
        }
    }
}

/// A genome prepared for repeated execution.
pub enum Executable {
    Tree(TreeProgram),
    Linear(LinearProgram, usize),
}

impl Executable {
    /// Static well-formedness check plus preparation. An error here is the
    /// "does not compile" case.
    pub fn prepare(g: &Genome) -> Result<Executable, GenomeError> {
        match g {
            Genome::Tree(t) => {
                t.validate()?;
                Ok(Executable::Tree(TreeProgram::compile(t)))
            }
            Genome::Linear(l) => LinearProgram::assemble(l)
                .map(|p| Executable::Linear(p, l.instructions.len()))
                .map_err(|e| GenomeError::Ill {
                    site: SiteId(e.line - 1),
                    message: e.message,
                }),
        }
    }

    fn trace_len(&self) -> usize {
        match self {
            Executable::Tree(p) => p.site_count(),
            Executable::Linear(_, n) => *n,
        }
    }

    pub fn run(&self, input: &str, limits: &Limits) -> Execution {
        let mut m = Machine::new(input, *limits, self.trace_len());
        let result = match self {
            Executable::Tree(p) => p.run(&mut m),
            Executable::Linear(p, _) => p.run(&mut m),
        };
        let (status, error) = match result {
            Ok(()) => (ExecStatus::Completed, None),
            Err(Abort::StepLimit) => (ExecStatus::StepLimit, None),
            Err(Abort::Error(msg)) => (ExecStatus::RuntimeError, Some(msg)),
        };
        Execution {
            status,
            error,
            output: m.output,
            trace: m.trace,
            steps: m.steps,
        }
    }
}

/// Runs a tree program once.
pub fn run_program(g: &TreeGenome, input: &str, limits: &Limits) -> Execution {
    Executable::Tree(TreeProgram::compile(g)).run(input, limits)
}

/// Runs any genome once; fails only when the genome does not assemble or
/// validate.
pub fn execute(g: &Genome, input: &str, limits: &Limits) -> Result<Execution, GenomeError> {
    Ok(Executable::prepare(g)?.run(input, limits))
}

/// Per-site execution counts summed over every case of `suite`.
pub fn coverage_of(g: &Genome, suite: &TestSuite, limits: &Limits) -> Result<CoverageMap, GenomeError> {
    let exe = Executable::prepare(g)?;
    let mut total = vec![0u64; g.trace_len()];
    for case in &suite.cases {
        let run = exe.run(&case.input, limits);
        for (t, c) in total.iter_mut().zip(&run.trace) {
            *t += c;
        }
    }
    Ok(CoverageMap::from_trace(g, &total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{parse_linear, parse_tree};

    fn run(src: &str, input: &str) -> Execution {
        run_program(&parse_tree(src).unwrap(), input, &Limits::default())
    }

    #[test]
    fn step_limit_is_exact() {
        let g = parse_tree("while 1 < 2 { x := 0; }").unwrap();
        let limits = Limits::new(1000, 100, 100).unwrap();
        let e = run_program(&g, "", &limits);
        assert_eq!(e.status, ExecStatus::StepLimit);
        assert_eq!(e.steps, 1000);
    }

    #[test]
    fn division_by_zero() {
        let e = run("x := 1 / 0;", "");
        assert_eq!(e.status, ExecStatus::RuntimeError);
        assert_eq!(e.output, "");
    }

    #[test]
    fn arithmetic_semantics() {
        let e = run("print 7 / -2; print -7 % 3; print 2 * 3 + 4; print a; print b[9];", "");
        assert_eq!(e.output, "-3 -1 10 0 0 ");
        assert_eq!(e.status, ExecStatus::Completed);
    }

    #[test]
    fn read_and_eof() {
        let e = run("while eof == 0 { read x; print x * 2; }", "1 2\n3");
        assert_eq!(e.output, "2 4 6 ");
        let e = run("read x; read y;", "5");
        assert_eq!(e.status, ExecStatus::RuntimeError);
    }

    #[test]
    fn short_circuit() {
        let e = run("if 0 && 1 / 0 { print 1; } if 1 || 1 / 0 { print 2; }", "");
        assert_eq!(e.status, ExecStatus::Completed);
        assert_eq!(e.output, "2 ");
    }

    #[test]
    fn break_and_exit() {
        let e = run("i := 0; while 1 { i := i + 1; if i > 3 { break; } } print i; exit; print 9;", "");
        assert_eq!(e.output, "4 ");
    }

    #[test]
    fn negative_index_errors() {
        let e = run("a[-1] := 2;", "");
        assert_eq!(e.status, ExecStatus::RuntimeError);
    }

    #[test]
    fn output_limit() {
        let g = parse_tree("while 1 { print 1; }").unwrap();
        let e = run_program(&g, "", &Limits::new(1_000_000, 10, 10).unwrap());
        assert_eq!(e.status, ExecStatus::RuntimeError);
        assert!(e.output.len() <= 10);
    }

    #[test]
    fn limits_must_be_positive() {
        assert_eq!(Limits::new(0, 1, 1), Err(LimitsError("max_steps")));
        assert_eq!(Limits::new(1, 0, 1), Err(LimitsError("max_output")));
        assert_eq!(Limits::new(1, 1, 0), Err(LimitsError("max_input_reads")));
    }

    #[test]
    fn trace_counts_statements() {
        let e = run("x := 0; while x < 3 { x := x + 1; } if x < 0 { print x; }", "");
        assert_eq!(e.trace, vec![1, 4, 3, 1, 0]);
        assert_eq!(e.steps, 9);
    }

    #[test]
    fn invalid_break_rejected() {
        let g = Genome::Tree(parse_tree("break;").unwrap());
        assert!(Executable::prepare(&g).is_err());
    }

    #[test]
    fn listing_runs() {
        let g = Genome::Linear(
            parse_linear(".text\nread\nstore x\nload x\npush 2\nmul\nprint\nhalt\nprint\n").unwrap(),
        );
        let e = execute(&g, "21", &Limits::default()).unwrap();
        assert_eq!(e.output, "42 ");
        assert_eq!(e.trace[0], 0);
        assert_eq!(e.trace[8], 0);
        let cov = CoverageMap::from_trace(&g, &e.trace);
        assert_eq!(cov.counts.len(), 8);
        assert_eq!(cov.covered_count(), 7);
    }

    #[test]
    fn listing_assembly_errors() {
        for bad in ["jmp L9\n", "L1:\nL1:\n", "frob\n", "push\n", "push x\n", "add 3\n"] {
            let g = Genome::Linear(parse_linear(bad).unwrap());
            assert!(Executable::prepare(&g).is_err(), "{bad}");
        }
    }

    #[test]
    fn lowering_agrees_with_tree() {
        let src = "n := 0; while eof == 0 { read a[n]; n := n + 1; }
            i := 0; while i < n && a[i] != 0 || i == 0 { if a[i] < 0 { print -a[i]; } else { print a[i]; } i := i + 1; if i > 4 { break; } }
            { print n; } exit; print 99;";
        let t = parse_tree(src).unwrap();
        let lin = Genome::Linear(lower(&t, "t.mini"));
        for input in ["", "3 -1 4", "1 2 3 4 5 6 7", "0 5"] {
            let a = run_program(&t, input, &Limits::default());
            let b = execute(&lin, input, &Limits::default()).unwrap();
            assert_eq!(a.output, b.output, "{input}");
            assert_eq!(a.status, b.status);
        }
    }
}
