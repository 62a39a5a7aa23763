//! Program representations and the copy/delete/swap operators over them.
//!
//! Two representations are supported: a statement-level [`TreeGenome`] and an
//! assembly-style [`LinearGenome`]. [`Genome`] wraps either one so that the
//! harness and the experiments can treat them uniformly.

mod canon;
mod linear;
mod mutate;
mod parse;
mod print;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub use canon::{canonical_text, strip_unreachable};
pub use linear::{parse_linear, parse_linear_with, LinearGenome, DEFAULT_PROTECTED_PREFIXES};
pub use mutate::{
    eligible_count, enumerate_mutations, enumerate_sites, insertion_point, sample_mutation,
    Mutation, MutationKind, Variant,
};
pub use parse::parse_tree;
pub use print::{expr_to_string, print_tree};
pub use tree::{BinOp, Expr, LValue, NodeInfo, Stmt, TreeGenome, UnOp};

/// Pre-order index of a statement, or index of an instruction in a listing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteId(pub usize);

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Inclusive 1-based line range in the canonical serialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineSpan {
    pub first: usize,
    pub last: usize,
}

impl LineSpan {
    pub fn line(n: usize) -> Self {
        LineSpan { first: n, last: n }
    }

    pub fn intersects(&self, other: &LineSpan) -> bool {
        self.first <= other.last && other.first <= self.last
    }

    /// Number of lines separating two spans; 0 when they intersect.
    pub fn distance(&self, other: &LineSpan) -> usize {
        if self.intersects(other) {
            0
        } else if self.last < other.first {
            other.first - self.last
        } else {
            self.first - other.last
        }
    }
}

/// One mutable unit of a genome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub id: SiteId,
    pub span: LineSpan,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenomeError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("empty program")]
    EmptyProgram,
    #[error("listing contains no instructions")]
    EmptyListing,
    #[error("site {site}: {message}")]
    Ill { site: SiteId, message: String },
    #[error("coverage references unknown site {0}")]
    UnknownSite(SiteId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MutationError {
    #[error("site {0} does not exist in this genome")]
    UnknownSite(SiteId),
    #[error("{kind} requires a source site")]
    MissingSource { kind: MutationKind },
    #[error("swap sites {0} and {1} are identical or nested")]
    NestedSwap(SiteId, SiteId),
    #[error("deleting site {0} would leave the program empty")]
    EmptyResult(SiteId),
    #[error("no covered sites to mutate")]
    NoCoveredSites,
    #[error("swap needs at least two covered, mutually non-nested sites")]
    SwapInfeasible,
    #[error("no site can be deleted without emptying the program")]
    DeleteInfeasible,
}

/// Lowercase-hex SHA-256 of a genome's canonical text.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn of(text: &str) -> Self {
        Digest(Sha256::digest(text.as_bytes()).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..12])
    }
}

impl Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("digest must be 32 bytes"))?;
        Ok(Digest(arr))
    }
}

/// Which representation a genome uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Tree,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Genome {
    Tree(TreeGenome),
    Linear(LinearGenome),
}

impl Genome {
    /// Parses by file extension: `.lin` is a linear listing, anything else is
    /// mini-language source.
    pub fn parse_path_text(path: &std::path::Path, text: &str) -> Result<Genome, GenomeError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("lin") => parse_linear(text).map(Genome::Linear),
            _ => parse_tree(text).map(Genome::Tree),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            Genome::Tree(_) => Representation::Tree,
            Genome::Linear(_) => Representation::Linear,
        }
    }

    pub fn sites(&self) -> Vec<Site> {
        match self {
            Genome::Tree(t) => t.sites(),
            Genome::Linear(l) => l.sites(),
        }
    }

    pub fn site_count(&self) -> usize {
        match self {
            Genome::Tree(t) => t.site_count(),
            Genome::Linear(l) => l.site_count(),
        }
    }

    /// Program size for walk statistics: statements for trees, instructions
    /// (protected lines included) for listings.
    pub fn size(&self) -> usize {
        match self {
            Genome::Tree(t) => t.site_count(),
            Genome::Linear(l) => l.instructions.len(),
        }
    }

    pub fn size_unit(&self) -> &'static str {
        match self {
            Genome::Tree(_) => "statements",
            Genome::Linear(_) => "instructions",
        }
    }

    /// Length of the trace vector an execution of this genome produces.
    pub fn trace_len(&self) -> usize {
        match self {
            Genome::Tree(t) => t.site_count(),
            Genome::Linear(l) => l.instructions.len(),
        }
    }

    pub fn serialize(&self) -> String {
        match self {
            Genome::Tree(t) => print_tree(t),
            Genome::Linear(l) => l.serialize(),
        }
    }

    pub fn canonical_key(&self) -> Digest {
        Digest::of(&canonical_text(self))
    }

    pub fn apply(&self, m: &Mutation) -> Result<Genome, MutationError> {
        mutate::apply_mutation(self, m)
    }

    pub fn file_extension(&self) -> &'static str {
        match self {
            Genome::Tree(_) => "mini",
            Genome::Linear(_) => "lin",
        }
    }

    /// Site `a`'s subtree contains site `b` (or they are the same site).
    pub fn contains(&self, a: SiteId, b: SiteId, sizes: &[usize]) -> bool {
        match self {
            Genome::Tree(_) => a.0 <= b.0 && b.0 < a.0 + sizes[a.0],
            Genome::Linear(_) => a == b,
        }
    }

    /// Subtree size per site id position (tree), or all ones (listing).
    pub fn extents(&self) -> Vec<usize> {
        match self {
            Genome::Tree(t) => t.node_info().into_iter().map(|n| n.size).collect(),
            Genome::Linear(l) => vec![1; l.instructions.len()],
        }
    }
}

impl From<TreeGenome> for Genome {
    fn from(t: TreeGenome) -> Self {
        Genome::Tree(t)
    }
}

impl From<LinearGenome> for Genome {
    fn from(l: LinearGenome) -> Self {
        Genome::Linear(l)
    }
}
