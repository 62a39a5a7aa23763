//! Test execution, output comparison, verdicts and mutant deduplication.

mod external;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{Digest, Genome};
use crate::minilang::{CoverageMap, ExecStatus, Executable, Limits};

pub use external::{ExternalDescriptor, ExternalTarget, ExternalTest};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparator {
    #[default]
    Exact,
    WhitespaceInsensitive,
    CrashOnly,
}

impl Comparator {
    pub const ALL: [Comparator; 3] = [
        Comparator::Exact,
        Comparator::WhitespaceInsensitive,
        Comparator::CrashOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Comparator::Exact => "exact",
            Comparator::WhitespaceInsensitive => "whitespace-insensitive",
            Comparator::CrashOnly => "crash-only",
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Comparator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Comparator::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown comparator `{s}`"))
    }
}

pub fn compare_output(actual: &str, expected: &str, comparator: Comparator) -> bool {
    match comparator {
        Comparator::Exact => actual == expected,
        Comparator::WhitespaceInsensitive => actual.split_whitespace().eq(expected.split_whitespace()),
        Comparator::CrashOnly => true,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    pub input: String,
    pub expected_output: String,
    pub weight: u32,
}

impl TestCase {
    pub fn new(name: impl Into<String>, input: impl Into<String>, expected_output: impl Into<String>) -> Self {
        TestCase {
            name: name.into(),
            input: input.into(),
            expected_output: expected_output.into(),
            weight: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("test suite is empty")]
    EmptySuite,
    #[error("duplicate test case name `{0}`")]
    DuplicateCase(String),
    #[error("test case `{0}` has an input but no matching .out file")]
    MissingExpected(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("target descriptor: {0}")]
    Descriptor(String),
    #[error("coverage is unavailable: {0}")]
    CoverageUnavailable(String),
    #[error(transparent)]
    Genome(#[from] crate::genome::GenomeError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestSuite {
    pub cases: Vec<TestCase>,
    pub comparator: Comparator,
}

impl TestSuite {
    pub fn new(cases: Vec<TestCase>, comparator: Comparator) -> Result<Self, HarnessError> {
        if cases.is_empty() {
            return Err(HarnessError::EmptySuite);
        }
        let mut names = HashSet::new();
        for c in &cases {
            if !names.insert(c.name.as_str()) {
                return Err(HarnessError::DuplicateCase(c.name.clone()));
            }
        }
        Ok(TestSuite { cases, comparator })
    }

    /// Same cases under a different comparator.
    pub fn with_comparator(&self, comparator: Comparator) -> TestSuite {
        TestSuite {
            cases: self.cases.clone(),
            comparator,
        }
    }

    /// Loads `<name>.in` / `<name>.out` pairs from a directory, ordered by
    /// name. A missing `.in` means empty input.
    pub fn load_dir(dir: &Path, comparator: Comparator) -> Result<Self, HarnessError> {
        let mut names = BTreeSet::new();
        for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            let ext = path.extension().and_then(|e| e.to_str());
            if matches!(ext, Some("in") | Some("out")) {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    names.insert(stem.to_string());
                }
            }
        }
        let mut cases = Vec::new();
        for name in names {
            let inp = dir.join(format!("{name}.in"));
            let out = dir.join(format!("{name}.out"));
            if !out.exists() {
                return Err(HarnessError::MissingExpected(name));
            }
            let input = if inp.exists() {
                std::fs::read_to_string(&inp).map_err(io_err(&inp))?
            } else {
                String::new()
            };
            let expected = std::fs::read_to_string(&out).map_err(io_err(&out))?;
            cases.push(TestCase::new(name, input, expected));
        }
        TestSuite::new(cases, comparator)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Neutral,
    TestFailed,
    Crashed,
    Timeout,
    Invalid,
}

impl Outcome {
    pub fn is_neutral(self) -> bool {
        self == Outcome::Neutral
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Name of the case that ended evaluation, for any non-neutral outcome
    /// other than `Invalid`.
    pub first_failure: Option<String>,
    pub cases_run: usize,
}

impl Verdict {
    pub fn is_neutral(&self) -> bool {
        self.outcome.is_neutral()
    }

    fn invalid() -> Self {
        Verdict {
            outcome: Outcome::Invalid,
            first_failure: None,
            cases_run: 0,
        }
    }
}

/// Runs `suite` against a genome, stopping at the first failing case.
pub fn evaluate(g: &Genome, suite: &TestSuite, limits: &Limits) -> Verdict {
    evaluate_traced(g, suite, limits).0
}

/// Like [`evaluate`], also returning coverage when every case ran.
pub fn evaluate_traced(g: &Genome, suite: &TestSuite, limits: &Limits) -> (Verdict, Option<CoverageMap>) {
    let Ok(exe) = Executable::prepare(g) else {
        return (Verdict::invalid(), None);
    };
    let mut total = vec![0u64; g.trace_len()];
    for (i, case) in suite.cases.iter().enumerate() {
        let run = exe.run(&case.input, limits);
        let outcome = match run.status {
            ExecStatus::RuntimeError => Some(Outcome::Crashed),
            ExecStatus::StepLimit => Some(Outcome::Timeout),
            ExecStatus::Completed => {
                (!compare_output(&run.output, &case.expected_output, suite.comparator)).then_some(Outcome::TestFailed)
            }
        };
        if let Some(outcome) = outcome {
            let v = Verdict {
                outcome,
                first_failure: Some(case.name.clone()),
                cases_run: i + 1,
            };
            return (v, None);
        }
        for (t, c) in total.iter_mut().zip(&run.trace) {
            *t += c;
        }
    }
    let v = Verdict {
        outcome: Outcome::Neutral,
        first_failure: None,
        cases_run: suite.cases.len(),
    };
    (v, Some(CoverageMap::from_trace(g, &total)))
}

/// Set of canonical digests seen so far.
#[derive(Clone, Debug, Default)]
pub struct DedupLedger {
    seen: HashSet<Digest>,
    pub unique_count: usize,
    pub duplicate_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Freshness {
    Fresh,
    Duplicate,
}

impl DedupLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn offer(&mut self, g: &Genome) -> Freshness {
        self.offer_key(g.canonical_key())
    }

    pub fn offer_key(&mut self, key: Digest) -> Freshness {
        if self.seen.insert(key) {
            self.unique_count += 1;
            Freshness::Fresh
        } else {
            self.duplicate_count += 1;
            Freshness::Duplicate
        }
    }

    pub fn contains(&self, key: &Digest) -> bool {
        self.seen.contains(key)
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

/// Anything that can judge a genome against a fixed suite.
pub trait Evaluator: Sync {
    fn evaluate(&self, g: &Genome) -> Verdict;

    /// Per-site visit counts of the visible suite on `g`.
    fn coverage(&self, g: &Genome) -> Result<CoverageMap, HarnessError>;

    fn comparator(&self) -> Comparator;

    /// Verdict plus coverage when the genome is neutral. Implementations
    /// that can collect both in one pass should override this.
    fn evaluate_with_coverage(&self, g: &Genome) -> Result<(Verdict, Option<CoverageMap>), HarnessError> {
        let v = self.evaluate(g);
        if v.is_neutral() {
            Ok((v, Some(self.coverage(g)?)))
        } else {
            Ok((v, None))
        }
    }
}

/// In-process evaluation with the mini-language interpreter.
#[derive(Clone, Debug)]
pub struct HermeticEvaluator {
    pub suite: TestSuite,
    pub limits: Limits,
}

impl HermeticEvaluator {
    pub fn new(suite: TestSuite, limits: Limits) -> Self {
        HermeticEvaluator { suite, limits }
    }
}

impl Evaluator for HermeticEvaluator {
    fn evaluate(&self, g: &Genome) -> Verdict {
        evaluate(g, &self.suite, &self.limits)
    }

    fn coverage(&self, g: &Genome) -> Result<CoverageMap, HarnessError> {
        Ok(crate::minilang::coverage_of(g, &self.suite, &self.limits)?)
    }

    fn comparator(&self) -> Comparator {
        self.suite.comparator
    }

    fn evaluate_with_coverage(&self, g: &Genome) -> Result<(Verdict, Option<CoverageMap>), HarnessError> {
        Ok(evaluate_traced(g, &self.suite, &self.limits))
    }
}
