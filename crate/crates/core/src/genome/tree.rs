//! Statement-level syntax tree for the mini-language.
//!
//! Every [`Stmt`] node is one mutable unit. Site ids are the pre-order index
//! of the node over the whole program, so they are re-derived from the shape
//! of the tree after every edit rather than stored on the nodes.

use std::collections::BTreeSet;
use std::fmt;

use super::{GenomeError, LineSpan, Site, SiteId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(i64),
    Var(String),
    Index(String, Box<Expr>),
    /// `eof`: 1 when the input is exhausted, 0 otherwise.
    Eof,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Pre-order visit of every sub-expression.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Index(_, idx) => idx.visit(f),
            Expr::Unary(_, e) => e.visit(f),
            Expr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Expr::Lit(_) | Expr::Var(_) | Expr::Eof => {}
        }
    }

    /// Replaces the `n`-th (pre-order) sub-expression satisfying `pred` with
    /// `f(old)`. Returns true when a replacement happened.
    pub fn rewrite_nth(
        &mut self,
        pred: &impl Fn(&Expr) -> bool,
        n: &mut usize,
        f: &mut impl FnMut(&Expr) -> Expr,
    ) -> bool {
        if pred(self) {
            if *n == 0 {
                *self = f(self);
                return true;
            }
            *n -= 1;
        }
        match self {
            Expr::Index(_, idx) => idx.rewrite_nth(pred, n, f),
            Expr::Unary(_, e) => e.rewrite_nth(pred, n, f),
            Expr::Binary(_, l, r) => l.rewrite_nth(pred, n, f) || r.rewrite_nth(pred, n, f),
            Expr::Lit(_) | Expr::Var(_) | Expr::Eof => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LValue {
    Var(String),
    Index(String, Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign {
        target: LValue,
        value: Expr,
    },
    Read(LValue),
    Print(Expr),
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Block(Vec<Stmt>),
    Break,
    Exit,
}

impl Stmt {
    /// Number of statement nodes in this subtree, including itself.
    pub fn size(&self) -> usize {
        1 + self.children().map(Stmt::size).sum::<usize>()
    }

    /// Direct child statements in pre-order (then-branch before else-branch).
    pub fn children(&self) -> impl Iterator<Item = &Stmt> {
        let (a, b): (&[Stmt], &[Stmt]) = match self {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => (then_body, else_body.as_deref().unwrap_or(&[])),
            Stmt::While { body, .. } | Stmt::Block(body) => (body, &[]),
            _ => (&[], &[]),
        };
        a.iter().chain(b.iter())
    }

    pub fn is_compound(&self) -> bool {
        matches!(self, Stmt::If { .. } | Stmt::While { .. } | Stmt::Block(_))
    }

    /// Control never falls through past this statement.
    pub fn is_unconditional_exit(&self) -> bool {
        matches!(self, Stmt::Break | Stmt::Exit)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Stmt::Assign { .. } => "assign",
            Stmt::Read(_) => "read",
            Stmt::Print(_) => "print",
            Stmt::If { .. } => "if",
            Stmt::While { .. } => "while",
            Stmt::Block(_) => "block",
            Stmt::Break => "break",
            Stmt::Exit => "exit",
        }
    }

    /// Expressions owned directly by this statement (not by its children).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Assign { target, value } => {
                let mut v = lvalue_exprs(target);
                v.push(value);
                v
            }
            Stmt::Read(target) => lvalue_exprs(target),
            Stmt::Print(e) => vec![e],
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
            Stmt::Block(_) | Stmt::Break | Stmt::Exit => Vec::new(),
        }
    }

    pub fn own_exprs_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Stmt::Assign { target, value } => {
                let mut v = lvalue_exprs_mut(target);
                v.push(value);
                v
            }
            Stmt::Read(target) => lvalue_exprs_mut(target),
            Stmt::Print(e) => vec![e],
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => vec![cond],
            Stmt::Block(_) | Stmt::Break | Stmt::Exit => Vec::new(),
        }
    }
}

fn lvalue_exprs(lv: &LValue) -> Vec<&Expr> {
    match lv {
        LValue::Var(_) => Vec::new(),
        LValue::Index(_, e) => vec![e],
    }
}

fn lvalue_exprs_mut(lv: &mut LValue) -> Vec<&mut Expr> {
    match lv {
        LValue::Var(_) => Vec::new(),
        LValue::Index(_, e) => vec![e],
    }
}

/// A program at the statement-tree level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeGenome {
    pub body: Vec<Stmt>,
}

/// Per-node structural facts indexed by site id.
#[derive(Clone, Debug)]
pub struct NodeInfo {
    pub size: usize,
    pub depth: usize,
    /// Top-level statement of the program.
    pub top_level: bool,
    pub inside_loop: bool,
    pub kind: &'static str,
}

impl TreeGenome {
    pub fn new(body: Vec<Stmt>) -> Result<Self, GenomeError> {
        if body.is_empty() {
            return Err(GenomeError::EmptyProgram);
        }
        Ok(TreeGenome { body })
    }

    pub fn site_count(&self) -> usize {
        self.body.iter().map(Stmt::size).sum()
    }

    /// Sites in program order, with spans taken from the canonical layout.
    pub fn sites(&self) -> Vec<Site> {
        super::print::layout_tree(self)
            .1
            .into_iter()
            .enumerate()
            .map(|(i, span)| Site {
                id: SiteId(i),
                span,
            })
            .collect()
    }

    pub fn spans(&self) -> Vec<LineSpan> {
        super::print::layout_tree(self).1
    }

    pub fn node_info(&self) -> Vec<NodeInfo> {
        fn walk(stmts: &[Stmt], depth: usize, in_loop: bool, out: &mut Vec<NodeInfo>) {
            for s in stmts {
                out.push(NodeInfo {
                    size: s.size(),
                    depth,
                    top_level: depth == 0,
                    inside_loop: in_loop,
                    kind: s.kind_name(),
                });
                let child_loop = in_loop || matches!(s, Stmt::While { .. });
                match s {
                    Stmt::If {
                        then_body,
                        else_body,
                        ..
                    } => {
                        walk(then_body, depth + 1, child_loop, out);
                        if let Some(e) = else_body {
                            walk(e, depth + 1, child_loop, out);
                        }
                    }
                    Stmt::While { body, .. } | Stmt::Block(body) => {
                        walk(body, depth + 1, child_loop, out)
                    }
                    _ => {}
                }
            }
        }
        let mut out = Vec::with_capacity(self.site_count());
        walk(&self.body, 0, false, &mut out);
        out
    }

    /// The statement at pre-order position `id`.
    pub fn stmt(&self, id: SiteId) -> Option<&Stmt> {
        fn find<'a>(stmts: &'a [Stmt], target: usize, next: &mut usize) -> Option<&'a Stmt> {
            for s in stmts {
                let here = *next;
                let size = s.size();
                if target == here {
                    return Some(s);
                }
                if target < here + size {
                    *next += 1;
                    return match s {
                        Stmt::If {
                            then_body,
                            else_body,
                            ..
                        } => find(then_body, target, next).or_else(|| {
                            else_body.as_ref().and_then(|e| find(e, target, next))
                        }),
                        Stmt::While { body, .. } | Stmt::Block(body) => find(body, target, next),
                        _ => None,
                    };
                }
                *next += size;
            }
            None
        }
        find(&self.body, id.0, &mut 0)
    }

    /// Mutable access to the statement at pre-order position `id`.
    pub fn stmt_mut(&mut self, id: SiteId) -> Option<&mut Stmt> {
        fn find<'a>(
            stmts: &'a mut [Stmt],
            target: usize,
            next: &mut usize,
        ) -> Option<&'a mut Stmt> {
            for s in stmts.iter_mut() {
                let here = *next;
                let size = s.size();
                if target == here {
                    return Some(s);
                }
                if target < here + size {
                    *next += 1;
                    return match s {
                        Stmt::If {
                            then_body,
                            else_body,
                            ..
                        } => {
                            let then_size: usize = then_body.iter().map(Stmt::size).sum();
                            if target < *next + then_size {
                                find(then_body, target, next)
                            } else {
                                *next += then_size;
                                else_body.as_mut().and_then(|e| find(e, target, next))
                            }
                        }
                        Stmt::While { body, .. } | Stmt::Block(body) => find(body, target, next),
                        _ => None,
                    };
                }
                *next += size;
            }
            None
        }
        find(&mut self.body, id.0, &mut 0)
    }

    /// Static well-formedness: the mini-language analog of "compiles".
    pub fn validate(&self) -> Result<(), GenomeError> {
        if self.body.is_empty() {
            return Err(GenomeError::EmptyProgram);
        }
        for (i, info) in self.node_info().iter().enumerate() {
            if info.kind == "break" && !info.inside_loop {
                return Err(GenomeError::Ill {
                    site: SiteId(i),
                    message: "break outside of a loop".into(),
                });
            }
        }
        Ok(())
    }

    /// Scalar variable names, in first-occurrence order.
    pub fn scalar_names(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut note = |name: &str| {
            if seen.insert(name.to_string()) {
                out.push(name.to_string());
            }
        };
        fn stmts<'a>(body: &'a [Stmt], acc: &mut Vec<&'a Stmt>) {
            for s in body {
                acc.push(s);
                match s {
                    Stmt::If {
                        then_body,
                        else_body,
                        ..
                    } => {
                        stmts(then_body, acc);
                        if let Some(e) = else_body {
                            stmts(e, acc);
                        }
                    }
                    Stmt::While { body, .. } | Stmt::Block(body) => stmts(body, acc),
                    _ => {}
                }
            }
        }
        let mut all = Vec::new();
        stmts(&self.body, &mut all);
        for s in all {
            match s {
                Stmt::Assign {
                    target: LValue::Var(n),
                    ..
                }
                | Stmt::Read(LValue::Var(n)) => note(n),
                _ => {}
            }
            for e in s.own_exprs() {
                e.visit(&mut |x| {
                    if let Expr::Var(n) = x {
                        note(n)
                    }
                });
            }
        }
        out
    }
}

impl fmt::Display for TreeGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_tree(self))
    }
}
