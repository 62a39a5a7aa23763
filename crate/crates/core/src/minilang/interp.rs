//! Tree-walking interpreter. Names are resolved to slots once per program so
//! that a suite of runs does not repeat the lookup work.

use std::collections::HashMap;

use super::machine::{Abort, Machine};
use crate::genome::{BinOp, Expr, LValue, Stmt, TreeGenome, UnOp};

enum CExpr {
    Lit(i64),
    Var(usize),
    Index(usize, Box<CExpr>),
    Eof,
    Neg(Box<CExpr>),
    Not(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

enum CLv {
    Var(usize),
    Index(usize, CExpr),
}

enum CStmt {
    Assign(usize, CLv, CExpr),
    Read(usize, CLv),
    Print(usize, CExpr),
    If(usize, CExpr, Vec<CStmt>, Vec<CStmt>),
    While(usize, CExpr, Vec<CStmt>),
    Block(usize, Vec<CStmt>),
    Break(usize),
    Exit(usize),
}

#[derive(Default)]
struct Names {
    scalars: HashMap<String, usize>,
    arrays: HashMap<String, usize>,
}

impl Names {
    fn scalar(&mut self, n: &str) -> usize {
        let next = self.scalars.len();
        *self.scalars.entry(n.to_string()).or_insert(next)
    }

    fn array(&mut self, n: &str) -> usize {
        let next = self.arrays.len();
        *self.arrays.entry(n.to_string()).or_insert(next)
    }
}

/// A tree genome prepared for repeated execution.
pub struct TreeProgram {
    body: Vec<CStmt>,
    sites: usize,
    scalars: usize,
    arrays: usize,
}

impl TreeProgram {
    pub fn compile(g: &TreeGenome) -> TreeProgram {
        let mut names = Names::default();
        let mut next = 0usize;
        let body = compile_block(&g.body, &mut names, &mut next);
        TreeProgram {
            body,
            sites: next,
            scalars: names.scalars.len(),
            arrays: names.arrays.len(),
        }
    }

    pub fn site_count(&self) -> usize {
        self.sites
    }

    pub(crate) fn run(&self, m: &mut Machine<'_>) -> Result<(), Abort> {
        m.reset_storage(self.scalars, self.arrays);
        match exec_block(&self.body, m)? {
            Flow::Normal | Flow::Exit => Ok(()),
            Flow::Break => Err(Abort::Error("break outside of a loop".into())),
        }
    }
}

fn compile_expr(e: &Expr, names: &mut Names) -> CExpr {
    match e {
        Expr::Lit(v) => CExpr::Lit(*v),
        Expr::Var(n) => CExpr::Var(names.scalar(n)),
        Expr::Index(n, idx) => {
            let slot = names.array(n);
            CExpr::Index(slot, Box::new(compile_expr(idx, names)))
        }
        Expr::Eof => CExpr::Eof,
        Expr::Unary(UnOp::Neg, x) => CExpr::Neg(Box::new(compile_expr(x, names))),
        Expr::Unary(UnOp::Not, x) => CExpr::Not(Box::new(compile_expr(x, names))),
        Expr::Binary(op, l, r) => CExpr::Bin(
            *op,
            Box::new(compile_expr(l, names)),
            Box::new(compile_expr(r, names)),
        ),
    }
}

fn compile_lv(lv: &LValue, names: &mut Names) -> CLv {
    match lv {
        LValue::Var(n) => CLv::Var(names.scalar(n)),
        LValue::Index(n, idx) => {
            let slot = names.array(n);
            CLv::Index(slot, compile_expr(idx, names))
        }
    }
}

fn compile_block(body: &[Stmt], names: &mut Names, next: &mut usize) -> Vec<CStmt> {
    body.iter().map(|s| compile_stmt(s, names, next)).collect()
}

fn compile_stmt(s: &Stmt, names: &mut Names, next: &mut usize) -> CStmt {
    let site = *next;
    *next += 1;
    match s {
        Stmt::Assign { target, value } => {
            CStmt::Assign(site, compile_lv(target, names), compile_expr(value, names))
        }
        Stmt::Read(target) => CStmt::Read(site, compile_lv(target, names)),
        Stmt::Print(e) => CStmt::Print(site, compile_expr(e, names)),
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            let cond = compile_expr(cond, names);
            let then_body = compile_block(then_body, names, next);
            let else_body = else_body
                .as_ref()
                .map(|e| compile_block(e, names, next))
                .unwrap_or_default();
            CStmt::If(site, cond, then_body, else_body)
        }
        Stmt::While { cond, body } => {
            let cond = compile_expr(cond, names);
            CStmt::While(site, cond, compile_block(body, names, next))
        }
        Stmt::Block(body) => CStmt::Block(site, compile_block(body, names, next)),
        Stmt::Break => CStmt::Break(site),
        Stmt::Exit => CStmt::Exit(site),
    }
}

enum Flow {
    Normal,
    Break,
    Exit,
}

fn eval(e: &CExpr, m: &mut Machine<'_>) -> Result<i64, Abort> {
    Ok(match e {
        CExpr::Lit(v) => *v,
        CExpr::Var(slot) => m.scalars[*slot],
        CExpr::Index(arr, idx) => {
            let i = eval(idx, m)?;
            m.load(*arr, i)?
        }
        CExpr::Eof => m.eof(),
        CExpr::Neg(x) => {
            let v = eval(x, m)?;
            v.checked_neg()
                .ok_or_else(|| Abort::Error("arithmetic overflow".into()))?
        }
        CExpr::Not(x) => (eval(x, m)? == 0) as i64,
        CExpr::Bin(BinOp::And, l, r) => {
            if eval(l, m)? == 0 {
                0
            } else {
                (eval(r, m)? != 0) as i64
            }
        }
        CExpr::Bin(BinOp::Or, l, r) => {
            if eval(l, m)? != 0 {
                1
            } else {
                (eval(r, m)? != 0) as i64
            }
        }
        CExpr::Bin(op, l, r) => {
            let a = eval(l, m)?;
            let b = eval(r, m)?;
            super::machine::binary(*op, a, b)?
        }
    })
}

fn store(lv: &CLv, value: Option<i64>, m: &mut Machine<'_>) -> Result<(), Abort> {
    match lv {
        CLv::Var(slot) => {
            let v = match value {
                Some(v) => v,
                None => m.read()?,
            };
            m.scalars[*slot] = v;
        }
        CLv::Index(arr, idx) => {
            let i = eval(idx, m)?;
            let v = match value {
                Some(v) => v,
                None => m.read()?,
            };
            m.store(*arr, i, v)?;
        }
    }
    Ok(())
}

fn exec_block(body: &[CStmt], m: &mut Machine<'_>) -> Result<Flow, Abort> {
    for s in body {
        match exec(s, m)? {
            Flow::Normal => {}
            other => return Ok(other),
        }
    }
    Ok(Flow::Normal)
}

fn exec(s: &CStmt, m: &mut Machine<'_>) -> Result<Flow, Abort> {
    match s {
        CStmt::Assign(site, lv, value) => {
            m.tick(*site)?;
            // The right-hand side is evaluated before the index expression.
            let v = eval(value, m)?;
            store(lv, Some(v), m)?;
        }
        CStmt::Read(site, lv) => {
            m.tick(*site)?;
            store(lv, None, m)?;
        }
        CStmt::Print(site, e) => {
            m.tick(*site)?;
            let v = eval(e, m)?;
            m.print(v)?;
        }
        CStmt::If(site, cond, then_body, else_body) => {
            m.tick(*site)?;
            let body = if eval(cond, m)? != 0 {
                then_body
            } else {
                else_body
            };
            return exec_block(body, m);
        }
        CStmt::While(site, cond, body) => loop {
            m.tick(*site)?;
            if eval(cond, m)? == 0 {
                return Ok(Flow::Normal);
            }
            match exec_block(body, m)? {
                Flow::Normal => {}
                Flow::Break => return Ok(Flow::Normal),
                Flow::Exit => return Ok(Flow::Exit),
            }
        },
        CStmt::Block(site, body) => {
            m.tick(*site)?;
            return exec_block(body, m);
        }
        CStmt::Break(site) => {
            m.tick(*site)?;
            return Ok(Flow::Break);
        }
        CStmt::Exit(site) => {
            m.tick(*site)?;
            return Ok(Flow::Exit);
        }
    }
    Ok(Flow::Normal)
}
