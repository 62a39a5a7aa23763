//! Recursive-descent parser for mini-language source.

use super::tree::{BinOp, Expr, LValue, Stmt, TreeGenome, UnOp};
use super::GenomeError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(u64),
    Ident(String),
    Kw(&'static str),
    Sym(&'static str),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const KEYWORDS: &[&str] = &[
    "if", "else", "while", "read", "print", "break", "exit", "eof",
];

// Longest symbols first so that `<=` wins over `<`.
const SYMBOLS: &[&str] = &[
    ":=", "<=", ">=", "==", "!=", "&&", "||", ";", "{", "}", "[", "]", "(", ")", "+", "-", "*",
    "/", "%", "<", ">", "!",
];

fn lex(src: &str) -> Result<Vec<Token>, GenomeError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let text = &src[start..i];
            let value = text.parse::<u64>().map_err(|_| GenomeError::Syntax {
                line,
                column: col,
                message: format!("integer literal `{text}` out of range"),
            })?;
            col += i - start;
            out.push(Token {
                tok: Tok::Int(value),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            col += i - start;
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_string()),
            };
            out.push(Token {
                tok,
                line: start_line,
                column: start_col,
            });
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    line: start_line,
                    column: start_col,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(GenomeError::Syntax {
                    line,
                    column: col,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> GenomeError {
        let t = &self.toks[self.pos];
        GenomeError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Kw(k) => format!("keyword `{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
        }
    }

    fn expect(&mut self, sym: &'static str) -> Result<(), GenomeError> {
        if *self.peek() == Tok::Sym(sym) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected `{sym}`, found {}",
                Self::describe(self.peek())
            )))
        }
    }

    fn program(&mut self) -> Result<Vec<Stmt>, GenomeError> {
        let mut body = Vec::new();
        while *self.peek() != Tok::End {
            body.push(self.stmt()?);
        }
        Ok(body)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, GenomeError> {
        self.expect("{")?;
        let mut body = Vec::new();
        loop {
            match self.peek() {
                Tok::Sym("}") => {
                    self.bump();
                    return Ok(body);
                }
                Tok::End => return Err(self.error("unterminated block, expected `}`")),
                _ => body.push(self.stmt()?),
            }
        }
    }

    fn stmt(&mut self) -> Result<Stmt, GenomeError> {
        match self.peek().clone() {
            Tok::Kw("if") => {
                self.bump();
                let cond = self.expr()?;
                let then_body = self.block()?;
                let else_body = if *self.peek() == Tok::Kw("else") {
                    self.bump();
                    Some(self.block()?)
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_body,
                    else_body,
                })
            }
            Tok::Kw("while") => {
                self.bump();
                let cond = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::Kw("read") => {
                self.bump();
                let target = self.lvalue()?;
                self.expect(";")?;
                Ok(Stmt::Read(target))
            }
            Tok::Kw("print") => {
                self.bump();
                let e = self.expr()?;
                self.expect(";")?;
                Ok(Stmt::Print(e))
            }
            Tok::Kw("break") => {
                self.bump();
                self.expect(";")?;
                Ok(Stmt::Break)
            }
            Tok::Kw("exit") => {
                self.bump();
                self.expect(";")?;
                Ok(Stmt::Exit)
            }
            Tok::Sym("{") => Ok(Stmt::Block(self.block()?)),
            Tok::Ident(_) => {
                let target = self.lvalue()?;
                self.expect(":=")?;
                let value = self.expr()?;
                self.expect(";")?;
                Ok(Stmt::Assign { target, value })
            }
            other => Err(self.error(format!(
                "expected a statement, found {}",
                Self::describe(&other)
            ))),
        }
    }

    fn lvalue(&mut self) -> Result<LValue, GenomeError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::Sym("[") {
                    self.bump();
                    let idx = self.expr()?;
                    self.expect("]")?;
                    Ok(LValue::Index(name, idx))
                } else {
                    Ok(LValue::Var(name))
                }
            }
            other => Err(self.error(format!(
                "expected a variable, found {}",
                Self::describe(&other)
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr, GenomeError> {
        self.binary(1)
    }

    fn binop_at(tok: &Tok) -> Option<BinOp> {
        let Tok::Sym(s) = tok else { return None };
        Some(match *s {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }

    // Precedence climbing; comparisons do not chain.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, GenomeError> {
        if min_prec > 5 {
            return self.unary();
        }
        let mut lhs = self.binary(min_prec + 1)?;
        while let Some(op) = Self::binop_at(self.peek()) {
            if op.precedence() != min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(min_prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
            if op.is_comparison() {
                if let Some(next) = Self::binop_at(self.peek()) {
                    if next.is_comparison() {
                        return Err(self.error("comparisons cannot be chained"));
                    }
                }
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, GenomeError> {
        match self.peek().clone() {
            Tok::Sym("-") => {
                self.bump();
                if let Tok::Int(v) = *self.peek() {
                    self.bump();
                    return neg_literal(v).ok_or_else(|| self.error("integer literal out of range"));
                }
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Sym("!") => {
                self.bump();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, GenomeError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                i64::try_from(v)
                    .map(Expr::Lit)
                    .map_err(|_| self.error("integer literal out of range"))
            }
            Tok::Kw("eof") => {
                self.bump();
                Ok(Expr::Eof)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::Sym("[") {
                    self.bump();
                    let idx = self.expr()?;
                    self.expect("]")?;
                    Ok(Expr::Index(name, Box::new(idx)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            other => Err(self.error(format!(
                "expected an expression, found {}",
                Self::describe(&other)
            ))),
        }
    }
}

fn neg_literal(v: u64) -> Option<Expr> {
    let n = -(v as i128);
    i64::try_from(n).ok().map(Expr::Lit)
}

/// Parses mini-language source into a statement tree.
pub fn parse_tree(source: &str) -> Result<TreeGenome, GenomeError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0 };
    let body = p.program()?;
    TreeGenome::new(body)
}
