//! Copy, delete and swap over both representations.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linear::LinearGenome;
use super::tree::{Stmt, TreeGenome};
use super::{Digest, Genome, GenomeError, MutationError, Site, SiteId};
use crate::minilang::CoverageMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationKind {
    Copy,
    Delete,
    Swap,
}

impl MutationKind {
    pub const ALL: [MutationKind; 3] = [MutationKind::Copy, MutationKind::Delete, MutationKind::Swap];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::Copy => "copy",
            MutationKind::Delete => "delete",
            MutationKind::Swap => "swap",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One edit. Swaps are stored with `source < target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mutation {
    pub kind: MutationKind,
    pub source: Option<SiteId>,
    pub target: SiteId,
}

impl Mutation {
    pub fn delete(target: SiteId) -> Self {
        Mutation {
            kind: MutationKind::Delete,
            source: None,
            target,
        }
    }

    pub fn copy(source: SiteId, target: SiteId) -> Self {
        Mutation {
            kind: MutationKind::Copy,
            source: Some(source),
            target,
        }
    }

    pub fn swap(a: SiteId, b: SiteId) -> Self {
        Mutation {
            kind: MutationKind::Swap,
            source: Some(a.min(b)),
            target: a.max(b),
        }
    }

    /// Every site this mutation references.
    pub fn sites(&self) -> Vec<SiteId> {
        match self.source {
            Some(s) => vec![s, self.target],
            None => vec![self.target],
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            Some(s) => write!(f, "{}({}, {})", self.kind, s, self.target),
            None => write!(f, "{}({})", self.kind, self.target),
        }
    }
}

/// A genome together with the chain of mutations that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    pub genome: Genome,
    pub provenance: Vec<Mutation>,
    pub origin: Digest,
}

impl Variant {
    pub fn original(genome: Genome) -> Self {
        let origin = genome.canonical_key();
        Variant {
            genome,
            provenance: Vec::new(),
            origin,
        }
    }

    pub fn derive(&self, m: Mutation) -> Result<Variant, MutationError> {
        let genome = self.genome.apply(&m)?;
        let mut provenance = self.provenance.clone();
        provenance.push(m);
        Ok(Variant {
            genome,
            provenance,
            origin: self.origin,
        })
    }

    /// Folds the provenance over `origin`, reproducing the variant's genome.
    pub fn replay(origin: &Genome, provenance: &[Mutation]) -> Result<Genome, MutationError> {
        provenance
            .iter()
            .try_fold(origin.clone(), |g, m| g.apply(m))
    }

    pub fn order(&self) -> usize {
        self.provenance.len()
    }
}

// --- tree editing -------------------------------------------------------

enum Edit<'a> {
    Delete(usize),
    InsertAfter(usize, &'a Stmt),
    InsertFirstChild(usize, &'a Stmt),
    Replace(usize, &'a Stmt, usize, &'a Stmt),
}

fn rewrite(stmts: &[Stmt], next: &mut usize, edit: &Edit<'_>) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len() + 1);
    for s in stmts {
        let id = *next;
        let size = s.size();
        match edit {
            Edit::Delete(t) if *t == id => {
                *next += size;
                continue;
            }
            Edit::Replace(a, with_a, _, _) if *a == id => {
                out.push((*with_a).clone());
                *next += size;
                continue;
            }
            Edit::Replace(_, _, b, with_b) if *b == id => {
                out.push((*with_b).clone());
                *next += size;
                continue;
            }
            _ => {}
        }
        *next += 1;
        let rebuilt = match s {
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let then_body = rewrite(then_body, next, edit);
                let else_body = else_body.as_ref().map(|e| rewrite(e, next, edit));
                Stmt::If {
                    cond: cond.clone(),
                    then_body,
                    else_body,
                }
            }
            Stmt::While { cond, body } => Stmt::While {
                cond: cond.clone(),
                body: rewrite(body, next, edit),
            },
            Stmt::Block(body) => {
                let mut inner = rewrite(body, next, edit);
                if let Edit::InsertFirstChild(t, c) = edit {
                    if *t == id {
                        inner.insert(0, (*c).clone());
                    }
                }
                Stmt::Block(inner)
            }
            leaf => leaf.clone(),
        };
        out.push(rebuilt);
        if let Edit::InsertAfter(t, c) = edit {
            if *t == id {
                out.push((*c).clone());
            }
        }
    }
    out
}

fn apply_tree(g: &TreeGenome, m: &Mutation) -> Result<TreeGenome, MutationError> {
    let n = g.site_count();
    let check = |s: SiteId| {
        if s.0 < n {
            Ok(s)
        } else {
            Err(MutationError::UnknownSite(s))
        }
    };
    let target = check(m.target)?;
    let body = match m.kind {
        MutationKind::Delete => {
            if g.body.len() == 1 && target.0 == 0 {
                return Err(MutationError::EmptyResult(target));
            }
            rewrite(&g.body, &mut 0, &Edit::Delete(target.0))
        }
        MutationKind::Copy => {
            let source = check(m.source.ok_or(MutationError::MissingSource { kind: m.kind })?)?;
            let copied = g.stmt(source).expect("checked").clone();
            let edit = match g.stmt(target) {
                Some(Stmt::Block(_)) => Edit::InsertFirstChild(target.0, &copied),
                _ => Edit::InsertAfter(target.0, &copied),
            };
            rewrite(&g.body, &mut 0, &edit)
        }
        MutationKind::Swap => {
            let source = check(m.source.ok_or(MutationError::MissingSource { kind: m.kind })?)?;
            let (a, b) = (source.min(target), source.max(target));
            let sa = g.stmt(a).expect("checked");
            if a == b || b.0 < a.0 + sa.size() {
                return Err(MutationError::NestedSwap(a, b));
            }
            let sb = g.stmt(b).expect("checked");
            rewrite(&g.body, &mut 0, &Edit::Replace(a.0, sb, b.0, sa))
        }
    };
    Ok(TreeGenome { body })
}

fn apply_linear(g: &LinearGenome, m: &Mutation) -> Result<LinearGenome, MutationError> {
    let check = |s: SiteId| {
        if g.is_site(s) {
            Ok(s)
        } else {
            Err(MutationError::UnknownSite(s))
        }
    };
    let target = check(m.target)?;
    let mut out = g.clone();
    match m.kind {
        MutationKind::Delete => {
            if g.site_count() == 1 {
                return Err(MutationError::EmptyResult(target));
            }
            out.instructions.remove(target.0);
            out.protected.remove(target.0);
        }
        MutationKind::Copy => {
            let source = check(m.source.ok_or(MutationError::MissingSource { kind: m.kind })?)?;
            let line = g.instructions[source.0].clone();
            out.instructions.insert(target.0 + 1, line);
            out.protected.insert(target.0 + 1, false);
        }
        MutationKind::Swap => {
            let source = check(m.source.ok_or(MutationError::MissingSource { kind: m.kind })?)?;
            if source == target {
                return Err(MutationError::NestedSwap(source, target));
            }
            out.instructions.swap(source.0, target.0);
        }
    }
    Ok(out)
}

pub(crate) fn apply_mutation(g: &Genome, m: &Mutation) -> Result<Genome, MutationError> {
    match g {
        Genome::Tree(t) => apply_tree(t, m).map(Genome::Tree),
        Genome::Linear(l) => apply_linear(l, m).map(Genome::Linear),
    }
}

/// Site id at which a Copy's duplicate lands in the mutated genome.
pub fn insertion_point(g: &Genome, m: &Mutation) -> Option<SiteId> {
    if m.kind != MutationKind::Copy {
        return None;
    }
    match g {
        Genome::Tree(t) => match t.stmt(m.target)? {
            Stmt::Block(_) => Some(SiteId(m.target.0 + 1)),
            s => Some(SiteId(m.target.0 + s.size())),
        },
        Genome::Linear(_) => Some(SiteId(m.target.0 + 1)),
    }
}

// --- site selection -----------------------------------------------------

fn all_site_ids(g: &Genome) -> Vec<SiteId> {
    match g {
        Genome::Tree(t) => (0..t.site_count()).map(SiteId).collect(),
        Genome::Linear(l) => l
            .protected
            .iter()
            .enumerate()
            .filter(|(_, p)| !**p)
            .map(|(i, _)| SiteId(i))
            .collect(),
    }
}

fn covered_ids(g: &Genome, coverage: &CoverageMap) -> Result<Vec<SiteId>, GenomeError> {
    let ids = all_site_ids(g);
    for id in coverage.counts.keys() {
        if ids.binary_search(id).is_err() {
            return Err(GenomeError::UnknownSite(*id));
        }
    }
    Ok(ids.into_iter().filter(|id| coverage.count(*id) > 0).collect())
}

/// Sites visited at least once under `coverage`, in program order.
pub fn enumerate_sites(g: &Genome, coverage: &CoverageMap) -> Result<Vec<Site>, GenomeError> {
    let covered = covered_ids(g, coverage)?;
    let sites = g.sites();
    Ok(covered
        .into_iter()
        .map(|id| *sites.iter().find(|s| s.id == id).expect("covered id is a site"))
        .collect())
}

struct Eligible {
    covered: Vec<SiteId>,
    deletable: Vec<SiteId>,
    extents: Vec<usize>,
}

impl Eligible {
    fn new(g: &Genome, coverage: &CoverageMap) -> Result<Self, MutationError> {
        let covered = covered_ids(g, coverage).map_err(|e| match e {
            GenomeError::UnknownSite(s) => MutationError::UnknownSite(s),
            _ => MutationError::NoCoveredSites,
        })?;
        let sole_top = match g {
            Genome::Tree(t) => t.body.len() == 1,
            Genome::Linear(l) => l.site_count() == 1,
        };
        let deletable = covered
            .iter()
            .copied()
            .filter(|s| match g {
                Genome::Tree(_) => !(sole_top && s.0 == 0),
                Genome::Linear(_) => !sole_top,
            })
            .collect();
        Ok(Eligible {
            covered,
            deletable,
            extents: g.extents(),
        })
    }

    fn disjoint(&self, a: SiteId, b: SiteId) -> bool {
        let (lo, hi) = (a.min(b), a.max(b));
        lo != hi && hi.0 >= lo.0 + self.extents[lo.0]
    }

    fn swap_pairs(&self) -> impl Iterator<Item = (SiteId, SiteId)> + '_ {
        self.covered.iter().enumerate().flat_map(move |(i, &a)| {
            self.covered[i + 1..]
                .iter()
                .filter(move |&&b| self.disjoint(a, b))
                .map(move |&b| (a, b))
        })
    }
}

/// Draws one mutation of `kind` uniformly over the eligible covered sites.
pub fn sample_mutation<R: Rng + ?Sized>(
    g: &Genome,
    coverage: &CoverageMap,
    kind: MutationKind,
    rng: &mut R,
) -> Result<Mutation, MutationError> {
    let el = Eligible::new(g, coverage)?;
    if el.covered.is_empty() {
        return Err(MutationError::NoCoveredSites);
    }
    let pick = |rng: &mut R, v: &[SiteId]| v[rng.gen_range(0..v.len())];
    match kind {
        MutationKind::Delete => {
            if el.deletable.is_empty() {
                return Err(MutationError::DeleteInfeasible);
            }
            Ok(Mutation::delete(pick(rng, &el.deletable)))
        }
        MutationKind::Copy => {
            let source = pick(rng, &el.covered);
            let target = pick(rng, &el.covered);
            Ok(Mutation::copy(source, target))
        }
        MutationKind::Swap => {
            if el.swap_pairs().next().is_none() {
                return Err(MutationError::SwapInfeasible);
            }
            // Rejection keeps the draw uniform over unordered valid pairs.
            loop {
                let a = pick(rng, &el.covered);
                let b = pick(rng, &el.covered);
                if el.disjoint(a, b) {
                    return Ok(Mutation::swap(a, b));
                }
            }
        }
    }
}

/// Every valid mutation of `kind` over covered sites, in a fixed order.
pub fn enumerate_mutations(
    g: &Genome,
    coverage: &CoverageMap,
    kind: MutationKind,
) -> Result<Vec<Mutation>, MutationError> {
    let el = Eligible::new(g, coverage)?;
    Ok(match kind {
        MutationKind::Delete => el.deletable.iter().map(|&t| Mutation::delete(t)).collect(),
        MutationKind::Copy => el
            .covered
            .iter()
            .flat_map(|&s| el.covered.iter().map(move |&t| Mutation::copy(s, t)))
            .collect(),
        MutationKind::Swap => el.swap_pairs().map(|(a, b)| Mutation::swap(a, b)).collect(),
    })
}

/// Size of the eligible mutation space for `kind`.
pub fn eligible_count(
    g: &Genome,
    coverage: &CoverageMap,
    kind: MutationKind,
) -> Result<usize, MutationError> {
    let el = Eligible::new(g, coverage)?;
    Ok(match kind {
        MutationKind::Delete => el.deletable.len(),
        MutationKind::Copy => el.covered.len() * el.covered.len(),
        MutationKind::Swap => el.swap_pairs().count(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{parse_linear, parse_tree};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree(src: &str) -> Genome {
        Genome::Tree(parse_tree(src).unwrap())
    }

    #[test]
    fn delete_straight_line() {
        let g = tree("a := 1; b := 2; c := 3; d := 4; e := 5;");
        let m = g.apply(&Mutation::delete(SiteId(2))).unwrap();
        assert_eq!(m.site_count(), 4);
        assert_eq!(m.serialize(), "a := 1;\nb := 2;\nd := 4;\ne := 5;\n");
    }

    #[test]
    fn delete_only_statement_rejected() {
        let g = tree("x := 1;");
        assert_eq!(
            g.apply(&Mutation::delete(SiteId(0))),
            Err(MutationError::EmptyResult(SiteId(0)))
        );
        // Emptying a nested block is fine.
        let g = tree("while x { y := 1; }");
        assert_eq!(
            g.apply(&Mutation::delete(SiteId(1))).unwrap().serialize(),
            "while x {\n}\n"
        );
    }

    #[test]
    fn copy_subtree_adds_its_size() {
        let g = tree("while i < 3 { i := i + 1; print i; } x := 0;");
        let m = g.apply(&Mutation::copy(SiteId(0), SiteId(3))).unwrap();
        assert_eq!(m.site_count(), g.site_count() + 3);
        assert_eq!(
            insertion_point(&g, &Mutation::copy(SiteId(0), SiteId(3))),
            Some(SiteId(4))
        );
    }

    #[test]
    fn copy_into_block_header_lands_first() {
        let g = tree("{ a := 1; } b := 2;");
        let m = g.apply(&Mutation::copy(SiteId(2), SiteId(0))).unwrap();
        assert_eq!(m.serialize(), "{\n  b := 2;\n  a := 1;\n}\nb := 2;\n");
        assert_eq!(
            insertion_point(&g, &Mutation::copy(SiteId(2), SiteId(0))),
            Some(SiteId(1))
        );
    }

    #[test]
    fn swap_is_an_involution_and_rejects_nesting() {
        let g = tree("a := 1; if x { b := 2; } else { c := 3; } d := 4;");
        let s = Mutation::swap(SiteId(2), SiteId(4));
        let once = g.apply(&s).unwrap();
        assert_ne!(once, g);
        assert_eq!(once.apply(&s).unwrap(), g);
        assert_eq!(
            g.apply(&Mutation::swap(SiteId(1), SiteId(2))),
            Err(MutationError::NestedSwap(SiteId(1), SiteId(2)))
        );
        assert!(g.apply(&Mutation::swap(SiteId(0), SiteId(0))).is_err());
        assert_eq!(
            g.apply(&Mutation::delete(SiteId(9))),
            Err(MutationError::UnknownSite(SiteId(9)))
        );
    }

    #[test]
    fn linear_operators() {
        let g = Genome::Linear(parse_linear(".text\na\nb\nc\n").unwrap());
        let c = g.apply(&Mutation::copy(SiteId(1), SiteId(3))).unwrap();
        assert_eq!(c.serialize(), ".text\na\nb\nc\na\n");
        let d = g.apply(&Mutation::delete(SiteId(2))).unwrap();
        assert_eq!(d.serialize(), ".text\na\nc\n");
        let s = g.apply(&Mutation::swap(SiteId(1), SiteId(3))).unwrap();
        assert_eq!(s.serialize(), ".text\nc\nb\na\n");
        assert!(g.apply(&Mutation::delete(SiteId(0))).is_err());
        assert!(g.apply(&Mutation::swap(SiteId(2), SiteId(2))).is_err());
    }

    #[test]
    fn sampling_respects_coverage() {
        let g = tree("a := 1; if 0 < 0 { b := 2; } c := 3;");
        let cov = CoverageMap::from_counts(&g, &[1, 1, 0, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in MutationKind::ALL {
            for _ in 0..200 {
                let m = sample_mutation(&g, &cov, kind, &mut rng).unwrap();
                assert!(m.sites().iter().all(|s| s.0 != 2), "{m}");
            }
        }
        let only = CoverageMap::from_counts(&g, &[0, 0, 0, 1]);
        assert_eq!(
            sample_mutation(&g, &only, MutationKind::Delete, &mut rng).unwrap(),
            Mutation::delete(SiteId(3))
        );
        assert_eq!(
            sample_mutation(&g, &only, MutationKind::Swap, &mut rng),
            Err(MutationError::SwapInfeasible)
        );
        let none = CoverageMap::from_counts(&g, &[0, 0, 0, 0]);
        assert_eq!(
            sample_mutation(&g, &none, MutationKind::Copy, &mut rng),
            Err(MutationError::NoCoveredSites)
        );
    }

    #[test]
    fn enumeration_counts() {
        let g = tree("a := 1; b := 2; c := 3;");
        let cov = CoverageMap::from_counts(&g, &[1, 1, 1]);
        assert_eq!(enumerate_mutations(&g, &cov, MutationKind::Delete).unwrap().len(), 3);
        assert_eq!(enumerate_mutations(&g, &cov, MutationKind::Copy).unwrap().len(), 9);
        assert_eq!(enumerate_mutations(&g, &cov, MutationKind::Swap).unwrap().len(), 3);
        // Nested pairs are excluded from swaps.
        let g = tree("while x { a := 1; b := 2; } c := 3;");
        let cov = CoverageMap::from_counts(&g, &[1, 1, 1, 1]);
        let swaps = enumerate_mutations(&g, &cov, MutationKind::Swap).unwrap();
        assert_eq!(swaps.len(), 4);
        assert_eq!(eligible_count(&g, &cov, MutationKind::Swap).unwrap(), 4);
    }

    #[test]
    fn enumerate_sites_rejects_unknown_ids() {
        let g = tree("a := 1;");
        let mut cov = CoverageMap::default();
        cov.counts.insert(SiteId(5), 1);
        assert_eq!(
            enumerate_sites(&g, &cov),
            Err(GenomeError::UnknownSite(SiteId(5)))
        );
    }

    #[test]
    fn provenance_replays() {
        let g = tree("a := 1; b := 2; c := 3;");
        let v = Variant::original(g.clone());
        let v = v.derive(Mutation::copy(SiteId(0), SiteId(2))).unwrap();
        let v = v.derive(Mutation::swap(SiteId(0), SiteId(1))).unwrap();
        assert_eq!(v.order(), 2);
        assert_eq!(Variant::replay(&g, &v.provenance).unwrap(), v.genome);
    }
}
