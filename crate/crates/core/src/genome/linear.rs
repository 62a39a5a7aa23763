//! Assembly-style listings: one instruction per line.

use super::{GenomeError, LineSpan, Site, SiteId};

/// Lines starting with one of these are directives and never mutated.
pub const DEFAULT_PROTECTED_PREFIXES: &[&str] = &["."];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearGenome {
    pub instructions: Vec<String>,
    /// Parallel to `instructions`.
    pub protected: Vec<bool>,
}

impl LinearGenome {
    pub fn from_parts(instructions: Vec<String>, protected: Vec<bool>) -> Self {
        debug_assert_eq!(instructions.len(), protected.len());
        LinearGenome {
            instructions,
            protected,
        }
    }

    /// One site per unprotected instruction; the id is the instruction index.
    pub fn sites(&self) -> Vec<Site> {
        self.protected
            .iter()
            .enumerate()
            .filter(|(_, p)| !**p)
            .map(|(i, _)| Site {
                id: SiteId(i),
                span: LineSpan::line(i + 1),
            })
            .collect()
    }

    pub fn site_count(&self) -> usize {
        self.protected.iter().filter(|p| !**p).count()
    }

    pub fn is_site(&self, id: SiteId) -> bool {
        self.protected.get(id.0).is_some_and(|p| !*p)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for line in &self.instructions {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Splits on line breaks, skipping blank lines; lines beginning with "." are
/// protected.
pub fn parse_linear(text: &str) -> Result<LinearGenome, GenomeError> {
    parse_linear_with(text, DEFAULT_PROTECTED_PREFIXES)
}

pub fn parse_linear_with(text: &str, protected_prefixes: &[&str]) -> Result<LinearGenome, GenomeError> {
    let mut instructions = Vec::new();
    let mut protected = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        protected.push(protected_prefixes.iter().any(|p| trimmed.starts_with(p)));
        instructions.push(trimmed.to_string());
    }
    if instructions.is_empty() {
        return Err(GenomeError::EmptyListing);
    }
    Ok(LinearGenome {
        instructions,
        protected,
    })
}
