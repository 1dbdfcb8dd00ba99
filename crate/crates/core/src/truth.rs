//! Truth tables over at most six inputs packed in a `u64`.

use std::fmt;

use thiserror::Error;

pub const MAX_ARITY: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TruthError {
    #[error("arity {0} exceeds the maximum of {MAX_ARITY}")]
    Arity(usize),
    #[error("truth literal `{0}` must be `0b` followed by {1} binary digits")]
    Literal(String, usize),
}

/// Boolean function of `arity` inputs. Row `r` holds the output for the
/// assignment where input `i` equals bit `i` of `r`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TruthTable {
    arity: u8,
    bits: u64,
}

impl TruthTable {
    pub fn new(arity: usize, bits: u64) -> Result<Self, TruthError> {
        if arity > MAX_ARITY {
            return Err(TruthError::Arity(arity));
        }
        Ok(Self { arity: arity as u8, bits: bits & Self::mask(arity) })
    }

    /// Builds a table by evaluating `f` on every row.
    pub fn from_fn(arity: usize, mut f: impl FnMut(&[bool]) -> bool) -> Result<Self, TruthError> {
        if arity > MAX_ARITY {
            return Err(TruthError::Arity(arity));
        }
        let mut bits = 0u64;
        let mut row = vec![false; arity];
        for r in 0..(1usize << arity) {
            for (i, v) in row.iter_mut().enumerate() {
                *v = (r >> i) & 1 == 1;
            }
            if f(&row) {
                bits |= 1 << r;
            }
        }
        Ok(Self { arity: arity as u8, bits })
    }

    pub fn constant(arity: usize, value: bool) -> Result<Self, TruthError> {
        Self::new(arity, if value { u64::MAX } else { 0 })
    }

    /// Projection onto input `i`.
    pub fn var(arity: usize, i: usize) -> Result<Self, TruthError> {
        Self::from_fn(arity, |row| row[i])
    }

    fn mask(arity: usize) -> u64 {
        if arity == MAX_ARITY {
            u64::MAX
        } else {
            (1u64 << (1 << arity)) - 1
        }
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn rows(&self) -> usize {
        1 << self.arity
    }

    pub fn get(&self, row: usize) -> bool {
        (self.bits >> row) & 1 == 1
    }

    /// Evaluates the function on an input vector in pin order.
    pub fn eval(&self, inputs: &[bool]) -> bool {
        debug_assert_eq!(inputs.len(), self.arity());
        let row = inputs
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i));
        self.get(row)
    }

    pub fn complement(&self) -> Self {
        Self { arity: self.arity, bits: !self.bits & Self::mask(self.arity()) }
    }

    pub fn is_constant(&self) -> bool {
        self.bits == 0 || self.bits == Self::mask(self.arity())
    }

    /// Table of `g(x) = f(y)` where `y[perm[i]] = x[i]`, i.e. input `i` of
    /// the result feeds input `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let n = self.arity();
        debug_assert_eq!(perm.len(), n);
        let mut bits = 0u64;
        for r in 0..self.rows() {
            let mut src = 0usize;
            for (i, &p) in perm.iter().enumerate() {
                if (r >> i) & 1 == 1 {
                    src |= 1 << p;
                }
            }
            if self.get(src) {
                bits |= 1 << r;
            }
        }
        Self { arity: self.arity, bits }
    }

    /// Bit-parallel evaluation: bit `k` of the result is the output for the
    /// assignment formed by bit `k` of every input word.
    pub fn eval_words(&self, inputs: &[u64]) -> u64 {
        debug_assert_eq!(inputs.len(), self.arity());
        let mut out = 0u64;
        for r in 0..self.rows() {
            if !self.get(r) {
                continue;
            }
            let mut term = u64::MAX;
            for (i, &w) in inputs.iter().enumerate() {
                term &= if (r >> i) & 1 == 1 { w } else { !w };
            }
            out |= term;
        }
        out
    }

    /// Whether the output depends on input `i`.
    pub fn depends_on(&self, i: usize) -> bool {
        (0..self.rows()).any(|r| r & (1 << i) == 0 && self.get(r) != self.get(r | (1 << i)))
    }

    /// `0b...` literal with the all-zero row as the last digit.
    pub fn to_literal(&self) -> String {
        let mut s = String::with_capacity(self.rows() + 2);
        s.push_str("0b");
        for r in (0..self.rows()).rev() {
            s.push(if self.get(r) { '1' } else { '0' });
        }
        s
    }

    pub fn parse_literal(arity: usize, text: &str) -> Result<Self, TruthError> {
        if arity > MAX_ARITY {
            return Err(TruthError::Arity(arity));
        }
        let rows = 1usize << arity;
        let bad = || TruthError::Literal(text.to_string(), rows);
        let digits = text.strip_prefix("0b").ok_or_else(bad)?;
        if digits.len() != rows {
            return Err(bad());
        }
        let mut bits = 0u64;
        for (k, c) in digits.chars().enumerate() {
            let row = rows - 1 - k;
            match c {
                '1' => bits |= 1 << row,
                '0' => {}
                _ => return Err(bad()),
            }
        }
        Ok(Self { arity: arity as u8, bits })
    }

    /// Lower-case hex of the packed bits, at least one digit per four rows.
    pub fn to_hex(&self) -> String {
        let width = (self.rows() + 3) / 4;
        format!("{:0width$x}", self.bits, width = width)
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_literal())
    }
}
