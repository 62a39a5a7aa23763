//! Canonical pretty-printer. One simple statement per line, two-space indent,
//! compound statements open on their header line and close on a line of their
//! own. Site spans are measured against this layout.

use std::fmt::Write as _;

use super::tree::{Expr, LValue, Stmt, TreeGenome, UnOp};
use super::LineSpan;

const UNARY_PREC: u8 = 6;
const ATOM_PREC: u8 = 7;

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(..) => UNARY_PREC,
        Expr::Lit(v) if *v < 0 => UNARY_PREC,
        _ => ATOM_PREC,
    }
}

pub(crate) fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let wrap = expr_prec(e) < min_prec;
    if wrap {
        out.push('(');
    }
    match e {
        Expr::Lit(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Var(n) => out.push_str(n),
        Expr::Index(n, idx) => {
            out.push_str(n);
            out.push('[');
            write_expr(out, idx, 0);
            out.push(']');
        }
        Expr::Eof => out.push_str("eof"),
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            // `-(3)` keeps a negated literal distinct from the literal `-3`.
            let inner_min = match (op, inner.as_ref()) {
                (UnOp::Neg, Expr::Lit(v)) if *v >= 0 => ATOM_PREC + 1,
                _ => UNARY_PREC,
            };
            write_expr(out, inner, inner_min);
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let (lp, rp) = if op.is_comparison() {
                (p + 1, p + 1)
            } else {
                (p, p + 1)
            };
            write_expr(out, l, lp);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, r, rp);
        }
    }
    if wrap {
        out.push(')');
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_lvalue(out: &mut String, lv: &LValue) {
    match lv {
        LValue::Var(n) => out.push_str(n),
        LValue::Index(n, idx) => {
            out.push_str(n);
            out.push('[');
            write_expr(out, idx, 0);
            out.push(']');
        }
    }
}

struct Layout {
    text: String,
    line: usize,
    spans: Vec<LineSpan>,
}

impl Layout {
    fn emit(&mut self, indent: usize, content: &str) -> usize {
        for _ in 0..indent {
            self.text.push_str("  ");
        }
        self.text.push_str(content);
        self.text.push('\n');
        self.line += 1;
        self.line
    }

    fn stmts(&mut self, body: &[Stmt], indent: usize) {
        for s in body {
            self.stmt(s, indent);
        }
    }

    fn stmt(&mut self, s: &Stmt, indent: usize) {
        let slot = self.spans.len();
        self.spans.push(LineSpan::line(0));
        let mut head = String::new();
        let first;
        match s {
            Stmt::Assign { target, value } => {
                write_lvalue(&mut head, target);
                head.push_str(" := ");
                write_expr(&mut head, value, 0);
                head.push(';');
                first = self.emit(indent, &head);
            }
            Stmt::Read(target) => {
                head.push_str("read ");
                write_lvalue(&mut head, target);
                head.push(';');
                first = self.emit(indent, &head);
            }
            Stmt::Print(e) => {
                head.push_str("print ");
                write_expr(&mut head, e, 0);
                head.push(';');
                first = self.emit(indent, &head);
            }
            Stmt::Break => first = self.emit(indent, "break;"),
            Stmt::Exit => first = self.emit(indent, "exit;"),
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                head.push_str("if ");
                write_expr(&mut head, cond, 0);
                head.push_str(" {");
                first = self.emit(indent, &head);
                self.stmts(then_body, indent + 1);
                if let Some(e) = else_body {
                    self.emit(indent, "} else {");
                    self.stmts(e, indent + 1);
                }
                self.emit(indent, "}");
            }
            Stmt::While { cond, body } => {
                head.push_str("while ");
                write_expr(&mut head, cond, 0);
                head.push_str(" {");
                first = self.emit(indent, &head);
                self.stmts(body, indent + 1);
                self.emit(indent, "}");
            }
            Stmt::Block(body) => {
                first = self.emit(indent, "{");
                self.stmts(body, indent + 1);
                self.emit(indent, "}");
            }
        }
        self.spans[slot] = LineSpan {
            first,
            last: self.line,
        };
    }
}

/// Canonical text plus per-site line spans (indexed by site id).
pub(crate) fn layout_tree(g: &TreeGenome) -> (String, Vec<LineSpan>) {
    layout_stmts(&g.body)
}

pub(crate) fn layout_stmts(body: &[Stmt]) -> (String, Vec<LineSpan>) {
    let mut l = Layout {
        text: String::new(),
        line: 0,
        spans: Vec::new(),
    };
    l.stmts(body, 0);
    (l.text, l.spans)
}

/// Deterministic canonical source text.
pub fn print_tree(g: &TreeGenome) -> String {
    layout_tree(g).0
}

#[cfg(test)]
mod tests {
    use super::super::parse_tree;
    use super::*;

    #[test]
    fn layout_and_spans() {
        let g = parse_tree("n:=0; while n<3 { if n == 1 { print n; } else { n := n+1; } n:=n+1; }")
            .unwrap();
        let (text, spans) = layout_tree(&g);
        assert_eq!(
            text,
            "n := 0;\nwhile n < 3 {\n  if n == 1 {\n    print n;\n  } else {\n    n := n + 1;\n  }\n  n := n + 1;\n}\n"
        );
        assert_eq!(spans[0], LineSpan::line(1));
        assert_eq!(spans[1], LineSpan { first: 2, last: 9 });
        assert_eq!(spans[2], LineSpan { first: 3, last: 7 });
        assert_eq!(spans[3], LineSpan::line(4));
        assert_eq!(spans[4], LineSpan::line(6));
        assert_eq!(spans[5], LineSpan::line(8));
    }

    #[test]
    fn parenthesizes_only_when_needed() {
        for src in [
            "x := (a + b) * c;",
            "x := a - (b - c);",
            "x := a - b - c;",
            "x := -(3);",
            "x := --3;",
            "x := !(a < b) && (c || d);",
            "x := (a < b) == (c < d);",
            "x := a[i - 1] % -2;",
        ] {
            let g = parse_tree(src).unwrap();
            assert_eq!(print_tree(&g), format!("{src}\n"), "{src}");
            assert_eq!(parse_tree(&print_tree(&g)).unwrap(), g);
        }
    }
}
