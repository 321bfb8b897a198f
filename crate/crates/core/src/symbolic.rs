//! Words, cylinder indexing and finite-memory functions on the full shift.
//!
//! A word `x_1 … x_m` over `{1,…,d}` is indexed by
//! `Σ (x_i − 1)·d^{m−i}`, first coordinate most significant. That ordering is
//! the one used by every table and every file format in the crate.
//!
//! Symbols are 1-based at the public boundary ([`Word`]) and 0-based
//! everywhere else.

use crate::error::{Error, Result};

/// Largest table (in entries) any finite-memory object may allocate.
pub const MAX_TABLE_ENTRIES: usize = 65_536;

/// `d^k`, checked against [`MAX_TABLE_ENTRIES`].
pub fn table_len(alphabet: usize, depth: usize) -> Result<usize> {
    let entries = (alphabet as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if entries > MAX_TABLE_ENTRIES as u128 {
        return Err(Error::Envelope {
            entries,
            limit: MAX_TABLE_ENTRIES,
        });
    }
    Ok(entries as usize)
}

pub(crate) fn check_alphabet(alphabet: usize) -> Result<()> {
    if alphabet < 2 {
        return Err(Error::Alphabet(alphabet));
    }
    Ok(())
}

/// Index of a 0-based word.
pub fn word_index(symbols: &[usize], alphabet: usize) -> usize {
    symbols.iter().fold(0, |acc, &s| acc * alphabet + s)
}

/// Inverse of [`word_index`]: the 0-based word of length `len` at `index`.
pub fn word_at(index: usize, len: usize, alphabet: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = rest % alphabet;
        rest /= alphabet;
    }
    out
}

/// A cylinder label `x_1 … x_m` with 1-based symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    alphabet: usize,
    symbols: Vec<usize>,
}

impl Word {
    /// Builds a word from 1-based symbols.
    pub fn new(symbols: &[usize], alphabet: usize) -> Result<Self> {
        check_alphabet(alphabet)?;
        for &s in symbols {
            if s == 0 || s > alphabet {
                return Err(Error::Symbol { symbol: s, alphabet });
            }
        }
        Ok(Word {
            alphabet,
            symbols: symbols.iter().map(|s| s - 1).collect(),
        })
    }

    pub fn from_index(index: usize, len: usize, alphabet: usize) -> Self {
        Word {
            alphabet,
            symbols: word_at(index, len, alphabet),
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index(&self) -> usize {
        word_index(&self.symbols, self.alphabet)
    }

    /// 1-based symbols.
    pub fn symbols(&self) -> Vec<usize> {
        self.symbols.iter().map(|s| s + 1).collect()
    }

    pub(crate) fn zero_based(&self) -> &[usize] {
        &self.symbols
    }

    /// The same word read backwards.
    pub fn reversed(&self) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.reverse();
        Word {
            alphabet: self.alphabet,
            symbols,
        }
    }
}

/// A real function on the full shift depending only on the first `depth`
/// coordinates, stored as its table of `d^depth` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMemoryFunction {
    alphabet: usize,
    depth: usize,
    values: Vec<f64>,
}

impl FiniteMemoryFunction {
    pub fn new(alphabet: usize, depth: usize, values: Vec<f64>) -> Result<Self> {
        check_alphabet(alphabet)?;
        let expected = table_len(alphabet, depth)?;
        if values.len() != expected {
            return Err(Error::TableLength {
                expected,
                got: values.len(),
            });
        }
        Ok(FiniteMemoryFunction {
            alphabet,
            depth,
            values,
        })
    }

    /// A depth-0 function.
    pub fn constant(alphabet: usize, value: f64) -> Result<Self> {
        Self::new(alphabet, 0, vec![value])
    }

    /// Tabulates `f` over all 0-based words of length `depth`.
    pub fn from_fn(alphabet: usize, depth: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_alphabet(alphabet)?;
        let len = table_len(alphabet, depth)?;
        let values = (0..len).map(|i| f(&word_at(i, depth, alphabet))).collect();
        Ok(FiniteMemoryFunction {
            alphabet,
            depth,
            values,
        })
    }

    /// Indicator of the cylinder `[w]`.
    pub fn indicator(word: &Word) -> Result<Self> {
        let target = word.index();
        let len = table_len(word.alphabet(), word.len())?;
        let values = (0..len).map(|i| if i == target { 1.0 } else { 0.0 }).collect();
        Self::new(word.alphabet(), word.len(), values)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value on a 0-based word of length at least `depth`; only the prefix is read.
    pub fn eval(&self, symbols: &[usize]) -> f64 {
        self.values[word_index(&symbols[..self.depth], self.alphabet)]
    }

    /// Value on a 1-based [`Word`] of length at least `depth`.
    pub fn eval_word(&self, word: &Word) -> Result<f64> {
        if word.alphabet() != self.alphabet {
            return Err(Error::AlphabetMismatch(self.alphabet, word.alphabet()));
        }
        if word.len() < self.depth {
            return Err(Error::InvalidInput(format!(
                "word of length {} is shorter than depth {}",
                word.len(),
                self.depth
            )));
        }
        Ok(self.eval(word.zero_based()))
    }

    /// Re-represents the function on words of length `depth`.
    pub fn extend_depth(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::Depth {
                current: self.depth,
                requested: depth,
            });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        let len = table_len(self.alphabet, depth)?;
        let stride = self.alphabet.pow((depth - self.depth) as u32);
        let values = (0..len).map(|i| self.values[i / stride]).collect();
        Ok(FiniteMemoryFunction {
            alphabet: self.alphabet,
            depth,
            values,
        })
    }

    /// `f∘σ`: one deeper, ignoring the first coordinate.
    pub fn compose_shift(&self) -> Result<Self> {
        let len = table_len(self.alphabet, self.depth + 1)?;
        let inner = self.values.len();
        let values = (0..len).map(|i| self.values[i % inner]).collect();
        Ok(FiniteMemoryFunction {
            alphabet: self.alphabet,
            depth: self.depth + 1,
            values,
        })
    }

    /// `f∘σⁿ`.
    pub fn compose_shift_n(&self, n: usize) -> Result<Self> {
        let len = table_len(self.alphabet, self.depth + n)?;
        let inner = self.values.len();
        let values = (0..len).map(|i| self.values[i % inner]).collect();
        Ok(FiniteMemoryFunction {
            alphabet: self.alphabet,
            depth: self.depth + n,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        FiniteMemoryFunction {
            alphabet: self.alphabet,
            depth: self.depth,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combines two functions entrywise after lifting both to the common depth.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(self.alphabet, other.alphabet));
        }
        let depth = self.depth.max(other.depth);
        let a = self.extend_depth(depth)?;
        let b = other.extend_depth(depth)?;
        let values = a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect();
        Ok(FiniteMemoryFunction {
            alphabet: self.alphabet,
            depth,
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x * y)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn exp(&self) -> Self {
        self.map(f64::exp)
    }

    pub fn ln(&self) -> Result<Self> {
        if let Some(bad) = self.values.iter().find(|&&v| v.is_nan() || v <= 0.0) {
            return Err(Error::Domain(format!("logarithm of nonpositive value {bad}")));
        }
        Ok(self.map(f64::ln))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sup-norm distance at the common depth.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }
}

/// Shorthand for the operations accepted by [`pointwise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pointwise {
    Add,
    Subtract,
    Scale(f64),
    Exp,
    Log,
}

/// Applies a unary or binary entrywise operation. Binary operations take
/// exactly two arguments, unary ones exactly one.
pub fn pointwise(op: Pointwise, args: &[&FiniteMemoryFunction]) -> Result<FiniteMemoryFunction> {
    let arity = match op {
        Pointwise::Add | Pointwise::Subtract => 2,
        _ => 1,
    };
    if args.len() != arity {
        return Err(Error::InvalidInput(format!(
            "{op:?} expects {arity} argument(s), got {}",
            args.len()
        )));
    }
    match op {
        Pointwise::Add => args[0].add(args[1]),
        Pointwise::Subtract => args[0].sub(args[1]),
        Pointwise::Scale(c) => Ok(args[0].scale(c)),
        Pointwise::Exp => Ok(args[0].exp()),
        Pointwise::Log => args[0].ln(),
    }
}
