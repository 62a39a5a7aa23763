//! Evaluation of targets built and run by external commands.
//!
//! A descriptor is a TOML file:
//!
//! ```toml
//! build_cmd = "cc -O0 -o {workdir}/prog {variant}"
//! timeout_ms = 2000
//! coverage_file = "coverage.txt"   # lines of "<site> <count>"
//!
//! [[test]]
//! name = "t1"
//! cmd = "{workdir}/prog < tests/t1.in"
//! expected_file = "tests/t1.out"
//! ```
//!
//! Commands run through `sh -c` with the descriptor's directory as working
//! directory. `{variant}` is the path of the serialized genome and
//! `{workdir}` a fresh scratch directory. No sandboxing is applied; callers
//! must isolate untrusted targets themselves.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::time::{Duration, Instant};

use serde::Deserialize;
use wait_timeout::ChildExt;

use super::{compare_output, io_err, Comparator, HarnessError, Outcome, Verdict};
use crate::genome::{Genome, SiteId};
use crate::minilang::CoverageMap;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalTest {
    pub name: Option<String>,
    pub cmd: String,
    pub expected_file: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalDescriptor {
    pub build_cmd: Option<String>,
    #[serde(rename = "test")]
    pub tests: Vec<ExternalTest>,
    pub timeout_ms: u64,
    pub coverage_file: Option<PathBuf>,
}

pub struct ExternalTarget {
    dir: PathBuf,
    desc: ExternalDescriptor,
    expected: Vec<String>,
    names: Vec<String>,
    comparator: Comparator,
    original: Genome,
}

enum Run {
    Exited(ExitStatus, String),
    Deadline,
}

impl ExternalTarget {
    pub fn load(descriptor: &Path, original: Genome, comparator: Comparator) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(descriptor).map_err(io_err(descriptor))?;
        let desc: ExternalDescriptor =
            toml::from_str(&text).map_err(|e| HarnessError::Descriptor(e.to_string()))?;
        if desc.tests.is_empty() {
            return Err(HarnessError::EmptySuite);
        }
        if desc.timeout_ms == 0 {
            return Err(HarnessError::Descriptor("timeout_ms must be positive".into()));
        }
        let dir = descriptor
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut expected = Vec::new();
        let mut names = Vec::new();
        for (i, t) in desc.tests.iter().enumerate() {
            let p = dir.join(&t.expected_file);
            expected.push(std::fs::read_to_string(&p).map_err(io_err(&p))?);
            let name = t.name.clone().unwrap_or_else(|| format!("test{i}"));
            if names.contains(&name) {
                return Err(HarnessError::DuplicateCase(name));
            }
            names.push(name);
        }
        Ok(ExternalTarget {
            dir,
            desc,
            expected,
            names,
            comparator,
            original,
        })
    }

    fn spawn(&self, template: &str, variant: &Path, workdir: &Path) -> std::io::Result<Child> {
        let cmd = template
            .replace("{variant}", &variant.display().to_string())
            .replace("{workdir}", &workdir.display().to_string());
        Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .current_dir(&self.dir)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
    }

    fn run(&self, template: &str, variant: &Path, workdir: &Path, deadline: Instant) -> std::io::Result<Run> {
        let mut child = self.spawn(template, variant, workdir)?;
        // Drain stdout on a thread so a chatty child cannot block on a full pipe.
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let left = deadline.saturating_duration_since(Instant::now());
        match child.wait_timeout(left)? {
            Some(status) => {
                let out = reader.join().unwrap_or_default();
                Ok(Run::Exited(status, String::from_utf8_lossy(&out).into_owned()))
            }
            None => {
                let _ = child.kill();
                let _ = child.wait();
                Ok(Run::Deadline)
            }
        }
    }

    fn verdict(outcome: Outcome, name: Option<&str>, cases_run: usize) -> Verdict {
        Verdict {
            outcome,
            first_failure: name.map(str::to_string),
            cases_run,
        }
    }

    fn evaluate_inner(&self, g: &Genome) -> std::io::Result<Verdict> {
        let work = tempfile::tempdir()?;
        let variant = work.path().join(format!("variant.{}", g.file_extension()));
        std::fs::write(&variant, g.serialize())?;
        let timeout = Duration::from_millis(self.desc.timeout_ms);
        if let Some(build) = &self.desc.build_cmd {
            match self.run(build, &variant, work.path(), Instant::now() + timeout * 10)? {
                Run::Exited(s, _) if s.success() => {}
                _ => return Ok(Self::verdict(Outcome::Invalid, None, 0)),
            }
        }
        for (i, t) in self.desc.tests.iter().enumerate() {
            let name = Some(self.names[i].as_str());
            let outcome = match self.run(&t.cmd, &variant, work.path(), Instant::now() + timeout)? {
                Run::Deadline => Some(Outcome::Timeout),
                Run::Exited(status, out) => {
                    if signalled(&status) {
                        Some(Outcome::Crashed)
                    } else if !status.success() || !compare_output(&out, &self.expected[i], self.comparator) {
                        Some(Outcome::TestFailed)
                    } else {
                        None
                    }
                }
            };
            if let Some(o) = outcome {
                return Ok(Self::verdict(o, name, i + 1));
            }
        }
        Ok(Self::verdict(Outcome::Neutral, None, self.desc.tests.len()))
    }
}

#[cfg(unix)]
fn signalled(s: &ExitStatus) -> bool {
    use std::os::unix::process::ExitStatusExt;
    s.signal().is_some()
}

#[cfg(not(unix))]
fn signalled(_: &ExitStatus) -> bool {
    false
}

impl super::Evaluator for ExternalTarget {
    fn evaluate(&self, g: &Genome) -> Verdict {
        // Failing to even spawn a shell is treated like a failed build.
        self.evaluate_inner(g)
            .unwrap_or_else(|_| Self::verdict(Outcome::Invalid, None, 0))
    }

    /// Only the registered original has a coverage file.
    fn coverage(&self, g: &Genome) -> Result<CoverageMap, HarnessError> {
        if g != &self.original {
            return Err(HarnessError::CoverageUnavailable(
                "external targets only provide coverage for the original program".into(),
            ));
        }
        let Some(file) = &self.desc.coverage_file else {
            // Without a coverage file every site counts as visited.
            let n = g.site_count();
            return Ok(CoverageMap::from_counts(g, &vec![1; n]));
        };
        let path = self.dir.join(file);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut counts = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| s.and_then(|s| s.parse::<u64>().ok());
            match (parse(parts.next()), parse(parts.next())) {
                (Some(site), Some(count)) => {
                    counts.insert(SiteId(site as usize), count);
                }
                _ => {
                    return Err(HarnessError::Descriptor(format!(
                        "{}:{}: expected `<site> <count>`",
                        path.display(),
                        n + 1
                    )))
                }
            }
        }
        let ids: Vec<SiteId> = g.sites().iter().map(|s| s.id).collect();
        if let Some(bad) = counts.keys().find(|k| !ids.contains(k)) {
            return Err(crate::genome::GenomeError::UnknownSite(*bad).into());
        }
        Ok(CoverageMap { counts })
    }

    fn comparator(&self) -> Comparator {
        self.comparator
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::super::Evaluator;
    use super::*;
    use crate::genome::parse_linear;

    fn target(dir: &Path, body: &str) -> ExternalTarget {
        std::fs::write(dir.join("t.out"), "a\nb\n").unwrap();
        let desc = dir.join("target.toml");
        std::fs::write(&desc, body).unwrap();
        let g = Genome::Linear(parse_linear("a\nb\n").unwrap());
        ExternalTarget::load(&desc, g, Comparator::Exact).unwrap()
    }

    #[test]
    fn external_outcomes() {
        let dir = tempfile::tempdir().unwrap();
        let t = target(
            dir.path(),
            "build_cmd = \"test -s {variant}\"\ntimeout_ms = 500\n[[test]]\ncmd = \"cat {variant}\"\nexpected_file = \"t.out\"\n",
        );
        let ok = Genome::Linear(parse_linear("a\nb\n").unwrap());
        assert_eq!(t.evaluate(&ok).outcome, Outcome::Neutral);
        let bad = Genome::Linear(parse_linear("b\na\n").unwrap());
        assert_eq!(t.evaluate(&bad).outcome, Outcome::TestFailed);
        assert_eq!(t.coverage(&ok).unwrap().covered_count(), 2);
        assert!(t.coverage(&bad).is_err());

        let t = target(
            dir.path(),
            "timeout_ms = 200\n[[test]]\ncmd = \"sleep 5\"\nexpected_file = \"t.out\"\n",
        );
        assert_eq!(t.evaluate(&ok).outcome, Outcome::Timeout);

        let t = target(
            dir.path(),
            "timeout_ms = 2000\n[[test]]\ncmd = \"kill -SEGV $$\"\nexpected_file = \"t.out\"\n",
        );
        assert_eq!(t.evaluate(&ok).outcome, Outcome::Crashed);

        let t = target(
            dir.path(),
            "build_cmd = \"false\"\ntimeout_ms = 200\n[[test]]\ncmd = \"true\"\nexpected_file = \"t.out\"\n",
        );
        assert_eq!(t.evaluate(&ok).outcome, Outcome::Invalid);
    }

    #[test]
    fn coverage_file_is_read() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("cov.txt"), "0 3\n1 0\n").unwrap();
        let t = target(
            dir.path(),
            "timeout_ms = 200\ncoverage_file = \"cov.txt\"\n[[test]]\ncmd = \"true\"\nexpected_file = \"t.out\"\n",
        );
        let g = Genome::Linear(parse_linear("a\nb\n").unwrap());
        let cov = t.coverage(&g).unwrap();
        assert_eq!(cov.count(SiteId(0)), 3);
        assert_eq!(cov.covered_count(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("t.out"), "").unwrap();
        let desc = dir.path().join("d.toml");
        std::fs::write(&desc, "timeout_ms = 1\nfoo = 2\n[[test]]\ncmd = \"true\"\nexpected_file = \"t.out\"\n").unwrap();
        let g = Genome::Linear(parse_linear("a\n").unwrap());
        assert!(matches!(
            ExternalTarget::load(&desc, g, Comparator::Exact),
            Err(HarnessError::Descriptor(_))
        ));
    }
}
