//! Canonical form used for mutant deduplication.
//!
//! Statements that can never run because they follow a `break` or `exit` in
//! the same block are dropped (for listings: instructions after `jmp`/`halt`
//! up to the next label), then whitespace is collapsed. Two programs whose
//! live code is structurally identical share a canonical text.

use super::linear::LinearGenome;
use super::tree::{Stmt, TreeGenome};
use super::{print_tree, Genome};

fn strip_block(body: &[Stmt]) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(body.len());
    for s in body {
        let kept = match s {
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => Stmt::If {
                cond: cond.clone(),
                then_body: strip_block(then_body),
                else_body: else_body.as_deref().map(strip_block),
            },
            Stmt::While { cond, body } => Stmt::While {
                cond: cond.clone(),
                body: strip_block(body),
            },
            Stmt::Block(b) => Stmt::Block(strip_block(b)),
            other => other.clone(),
        };
        let stop = kept.is_unconditional_exit();
        out.push(kept);
        if stop {
            break;
        }
    }
    out
}

/// Removes statements that follow an unconditional exit within their block.
pub fn strip_unreachable(g: &TreeGenome) -> TreeGenome {
    TreeGenome {
        body: strip_block(&g.body),
    }
}

fn linear_live_lines(l: &LinearGenome) -> Vec<&str> {
    let mut out = Vec::new();
    let mut dead = false;
    for (i, line) in l.instructions.iter().enumerate() {
        let text = line.trim();
        if l.protected[i] {
            out.push(text);
            continue;
        }
        if text.ends_with(':') {
            dead = false;
        }
        if dead {
            continue;
        }
        out.push(text);
        let op = text.split_whitespace().next().unwrap_or("");
        if op == "jmp" || op == "halt" {
            dead = true;
        }
    }
    out
}

fn normalize_ws(text: &str) -> String {
    text.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// The text that [`Genome::canonical_key`] hashes.
pub fn canonical_text(g: &Genome) -> String {
    match g {
        Genome::Tree(t) => format!("tree\n{}", normalize_ws(&print_tree(&strip_unreachable(t)))),
        Genome::Linear(l) => format!("linear\n{}", normalize_ws(&linear_live_lines(l).join("\n"))),
    }
}
