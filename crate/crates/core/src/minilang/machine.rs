//! Runtime state shared by the tree interpreter and the listing VM.

use super::Limits;
use crate::genome::BinOp;

/// Largest array index + 1 a program may touch.
pub const MAX_ARRAY_LEN: usize = 1 << 16;

#[derive(Debug)]
pub(crate) enum Abort {
    StepLimit,
    Error(String),
}

pub(crate) struct Machine<'a> {
    pub scalars: Vec<i64>,
    arrays: Vec<Vec<i64>>,
    input: Vec<&'a str>,
    pos: usize,
    reads: u64,
    pub output: String,
    pub steps: u64,
    pub trace: Vec<u64>,
    limits: Limits,
}

impl<'a> Machine<'a> {
    pub fn new(input: &'a str, limits: Limits, trace_len: usize) -> Self {
        Machine {
            scalars: Vec::new(),
            arrays: Vec::new(),
            input: input.split_whitespace().collect(),
            pos: 0,
            reads: 0,
            output: String::new(),
            steps: 0,
            trace: vec![0; trace_len],
            limits,
        }
    }

    pub fn reset_storage(&mut self, scalars: usize, arrays: usize) {
        self.scalars = vec![0; scalars];
        self.arrays = vec![Vec::new(); arrays];
    }

    /// Accounts one statement/instruction execution at `site`.
    #[inline]
    pub fn tick(&mut self, site: usize) -> Result<(), Abort> {
        if self.steps >= self.limits.max_steps {
            return Err(Abort::StepLimit);
        }
        self.steps += 1;
        self.trace[site] += 1;
        Ok(())
    }

    pub fn eof(&self) -> i64 {
        (self.pos >= self.input.len()) as i64
    }

    pub fn read(&mut self) -> Result<i64, Abort> {
        if self.reads >= self.limits.max_input_reads {
            return Err(Abort::Error("input read limit exceeded".into()));
        }
        let tok = self
            .input
            .get(self.pos)
            .ok_or_else(|| Abort::Error("read past end of input".into()))?;
        let v = tok
            .parse::<i64>()
            .map_err(|_| Abort::Error(format!("malformed input token `{tok}`")))?;
        self.pos += 1;
        self.reads += 1;
        Ok(v)
    }

    pub fn print(&mut self, v: i64) -> Result<(), Abort> {
        let token = format!("{v} ");
        if self.output.len() + token.len() > self.limits.max_output {
            return Err(Abort::Error("output limit exceeded".into()));
        }
        self.output.push_str(&token);
        Ok(())
    }

    fn check_index(i: i64) -> Result<usize, Abort> {
        if i < 0 {
            return Err(Abort::Error(format!("negative array index {i}")));
        }
        let u = i as usize;
        if u >= MAX_ARRAY_LEN {
            return Err(Abort::Error(format!("array index {i} out of bounds")));
        }
        Ok(u)
    }

    pub fn load(&self, arr: usize, i: i64) -> Result<i64, Abort> {
        let u = Self::check_index(i)?;
        Ok(self.arrays[arr].get(u).copied().unwrap_or(0))
    }

    pub fn store(&mut self, arr: usize, i: i64, v: i64) -> Result<(), Abort> {
        let u = Self::check_index(i)?;
        let a = &mut self.arrays[arr];
        if a.len() <= u {
            a.resize(u + 1, 0);
        }
        a[u] = v;
        Ok(())
    }
}

/// Arithmetic and comparison shared by both back ends. Logical operators are
/// evaluated strictly here; the tree interpreter short-circuits before
/// reaching this point.
pub(crate) fn binary(op: BinOp, a: i64, b: i64) -> Result<i64, Abort> {
    let overflow = || Abort::Error("arithmetic overflow".into());
    Ok(match op {
        BinOp::Add => a.checked_add(b).ok_or_else(overflow)?,
        BinOp::Sub => a.checked_sub(b).ok_or_else(overflow)?,
        BinOp::Mul => a.checked_mul(b).ok_or_else(overflow)?,
        BinOp::Div | BinOp::Rem if b == 0 => {
            return Err(Abort::Error("division by zero".into()))
        }
        BinOp::Div => a.checked_div(b).ok_or_else(overflow)?,
        BinOp::Rem => a.checked_rem(b).ok_or_else(overflow)?,
        BinOp::Lt => (a < b) as i64,
        BinOp::Le => (a <= b) as i64,
        BinOp::Gt => (a > b) as i64,
        BinOp::Ge => (a >= b) as i64,
        BinOp::Eq => (a == b) as i64,
        BinOp::Ne => (a != b) as i64,
        BinOp::And => (a != 0 && b != 0) as i64,
        BinOp::Or => (a != 0 || b != 0) as i64,
    })
}
