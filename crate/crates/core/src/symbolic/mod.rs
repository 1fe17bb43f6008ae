//! Finite symbolic dynamics: alphabets, words, the shift metric and the
//! shift spaces (full shifts, optionally restricted by forbidden blocks)
//! every other module works over.
//!
//! Points of the space are one-sided sequences `x = x_1 x_2 ...` and the
//! distance between two of them is `theta^(N-1)` where `N` is the first index
//! at which they disagree. With the default `theta = 1/2` a depth-`k` cylinder
//! has diameter exactly `2^-k`.

mod potential;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use potential::{
    lipschitz_constant, mixed_constant, refine, CylinderFunction, JointCylinderFunction,
};

/// Default cap on the number of words any single enumeration may produce.
pub const DEFAULT_WORD_CAP: usize = 1 << 16;

/// A finite word over the alphabet `{0, .., d-1}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    /// The constant word `s s ... s` of length `len`.
    pub fn constant(symbol: u8, len: usize) -> Self {
        Word(vec![symbol; len])
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, k: usize) -> &[u8] {
        &self.0[..k]
    }

    pub fn suffix(&self, k: usize) -> &[u8] {
        &self.0[self.0.len() - k..]
    }

    /// Parses a word and checks every symbol is below `alphabet_size`.
    pub fn parse_for(s: &str, alphabet_size: usize) -> Result<Self> {
        let word: Word = s.parse()?;
        if let Some(&bad) = word.0.iter().find(|&&b| b as usize >= alphabet_size) {
            return Err(Error::InvalidWord {
                word: s.to_string(),
                reason: format!("symbol {bad} outside alphabet of size {alphabet_size}"),
            });
        }
        Ok(word)
    }
}

impl From<&[u8]> for Word {
    fn from(s: &[u8]) -> Self {
        Word(s.to_vec())
    }
}

/// Symbols are written as base-36 digits, so alphabets up to 36 letters
/// have a one-character-per-symbol text form.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            let c = std::char::from_digit(b as u32, 36).ok_or(fmt::Error)?;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| {
                c.to_digit(36).map(|d| d as u8).ok_or_else(|| Error::InvalidWord {
                    word: s.to_string(),
                    reason: format!("`{c}` is not a base-36 digit"),
                })
            })
            .collect::<Result<Vec<u8>>>()
            .map(Word)
    }
}

/// Contraction base of the shift metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub base: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { base: 0.5 }
    }
}

/// Bounds on the distance between two sequences known only through their
/// first `k` symbols.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceBounds {
    pub lower: f64,
    pub upper: f64,
}

impl DistanceBounds {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

impl MetricParams {
    pub fn new(base: f64) -> Result<Self> {
        if !(base > 0.0 && base < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "metric base must lie in (0, 1), got {base}"
            )));
        }
        Ok(MetricParams { base })
    }

    /// Diameter of a depth-`k` cylinder.
    pub fn cylinder_diameter(&self, k: usize) -> f64 {
        self.base.powi(k as i32)
    }

    /// Distance between equal-length words, taking 0 when they coincide.
    /// This is exact whenever the words differ, and a lower bound otherwise.
    pub fn exact_distance(&self, w: &[u8], v: &[u8]) -> f64 {
        match first_disagreement(w, v) {
            Some(n) => self.base.powi(n as i32),
            None => 0.0,
        }
    }
}

/// Zero-based index of the first position where the words differ.
pub(crate) fn first_disagreement(w: &[u8], v: &[u8]) -> Option<usize> {
    w.iter().zip(v).position(|(a, b)| a != b)
}

/// Distance between two sequences whose first `k` symbols are `w` and `v`.
pub fn word_metric(w: &Word, v: &Word, params: &MetricParams) -> Result<DistanceBounds> {
    if w.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: w.len(),
            right: v.len(),
        });
    }
    Ok(match first_disagreement(w.symbols(), v.symbols()) {
        Some(n) => {
            let d = params.base.powi(n as i32);
            DistanceBounds { lower: d, upper: d }
        }
        None => DistanceBounds {
            lower: 0.0,
            upper: params.cylinder_diameter(w.len()),
        },
    })
}

/// A one-sided shift over `alphabet_size` symbols, optionally restricted by a
/// set of forbidden blocks of length `order + 1`.
///
/// Transitions live on the de Bruijn graph of length-`order` words: `w -> w'`
/// when `w' = w_2 .. w_m b` and the block `w b` is not forbidden. That graph
/// must be strongly connected over all `d^order` words.
#[derive(Clone, Debug)]
pub struct ShiftSpec {
    alphabet_size: usize,
    order: usize,
    forbidden: BTreeSet<Word>,
    metric: MetricParams,
    word_cap: usize,
}

impl PartialEq for ShiftSpec {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet_size == other.alphabet_size
            && self.order == other.order
            && self.forbidden == other.forbidden
            && self.metric == other.metric
    }
}

impl ShiftSpec {
    /// Full shift on `d` symbols.
    pub fn full(alphabet_size: usize) -> Result<Self> {
        Self::with_forbidden(alphabet_size, 1, std::iter::empty())
    }

    /// Subshift of finite type given by forbidden blocks of length `order + 1`.
    pub fn with_forbidden(
        alphabet_size: usize,
        order: usize,
        forbidden: impl IntoIterator<Item = Word>,
    ) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::InvalidSpec(format!(
                "alphabet size must be at least 2, got {alphabet_size}"
            )));
        }
        if alphabet_size > 36 {
            return Err(Error::InvalidSpec(format!(
                "alphabet size {alphabet_size} exceeds the supported maximum of 36"
            )));
        }
        if order < 1 {
            return Err(Error::InvalidSpec("order must be at least 1".into()));
        }
        let forbidden: BTreeSet<Word> = forbidden.into_iter().collect();
        for w in &forbidden {
            if w.len() != order + 1 {
                return Err(Error::InvalidSpec(format!(
                    "forbidden block `{w}` must have length {}",
                    order + 1
                )));
            }
            if w.symbols().iter().any(|&b| b as usize >= alphabet_size) {
                return Err(Error::InvalidSpec(format!(
                    "forbidden block `{w}` uses a symbol outside the alphabet"
                )));
            }
        }
        let spec = ShiftSpec {
            alphabet_size,
            order,
            forbidden,
            metric: MetricParams::default(),
            word_cap: DEFAULT_WORD_CAP,
        };
        spec.check_connected()?;
        Ok(spec)
    }

    pub fn with_word_cap(mut self, cap: usize) -> Self {
        self.word_cap = cap;
        self
    }

    pub fn with_metric(mut self, metric: MetricParams) -> Self {
        self.metric = metric;
        self
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn forbidden(&self) -> &BTreeSet<Word> {
        &self.forbidden
    }

    pub fn metric(&self) -> &MetricParams {
        &self.metric
    }

    pub fn word_cap(&self) -> usize {
        self.word_cap
    }

    pub fn is_full_shift(&self) -> bool {
        self.forbidden.is_empty()
    }

    /// Whether `symbol` may follow the word `w`. Only the last `order`
    /// symbols of `w` matter; shorter words carry no restriction.
    pub fn allowed(&self, w: &[u8], symbol: u8) -> bool {
        if self.forbidden.is_empty() || w.len() < self.order {
            return true;
        }
        let mut block = w[w.len() - self.order..].to_vec();
        block.push(symbol);
        !self.forbidden.contains(&Word(block))
    }

    /// Whether a finite word contains no forbidden block.
    pub fn is_allowed_word(&self, w: &[u8]) -> bool {
        if self.forbidden.is_empty() {
            return w.iter().all(|&b| (b as usize) < self.alphabet_size);
        }
        w.iter().all(|&b| (b as usize) < self.alphabet_size)
            && w.windows(self.order + 1)
                .all(|block| !self.forbidden.contains(&Word(block.to_vec())))
    }

    /// Checks the shift's configured cap against a prospective state count.
    pub(crate) fn check_cap(&self, what: &'static str, count: usize) -> Result<()> {
        if count > self.word_cap {
            return Err(Error::CapExceeded {
                what,
                count,
                cap: self.word_cap,
            });
        }
        Ok(())
    }

    /// Minimal Markov order a chain on this shift needs so that its
    /// transitions can respect the forbidden blocks.
    pub fn min_chain_order(&self) -> usize {
        if self.forbidden.is_empty() {
            1
        } else {
            self.order
        }
    }

    fn check_connected(&self) -> Result<()> {
        let nodes = enumerate_words(self, self.order)?;
        let n = nodes.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for (i, w) in nodes.iter().enumerate() {
            for b in 0..self.alphabet_size as u8 {
                if self.allowed(w.symbols(), b) {
                    let mut next = w.symbols()[1..].to_vec();
                    next.push(b);
                    let j = word_rank(&next, self.alphabet_size);
                    succ[i].push(j);
                    pred[j].push(i);
                }
            }
        }
        let reach = |adj: &[Vec<usize>]| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        if reach(&succ) && reach(&pred) {
            Ok(())
        } else {
            Err(Error::NotStronglyConnected { order: self.order })
        }
    }
}

/// Base-`d` rank of a word, i.e. its position in the lexicographic
/// enumeration of the full shift.
pub(crate) fn word_rank(w: &[u8], d: usize) -> usize {
    w.iter().fold(0usize, |acc, &b| acc * d + b as usize)
}

/// All allowed words of length `k`, in lexicographic order.
///
/// This ordering indexes every table, matrix and LP in the crate.
pub fn enumerate_words(spec: &ShiftSpec, k: usize) -> Result<Vec<Word>> {
    if k == 0 {
        return Err(Error::DepthTooSmall {
            requested: 0,
            minimum: 1,
        });
    }
    let d = spec.alphabet_size;
    if spec.forbidden.is_empty() {
        let count = (d as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        spec.check_cap("word enumeration", count.min(usize::MAX as u128) as usize)?;
        let count = count as usize;
        let mut out = Vec::with_capacity(count);
        let mut cur = vec![0u8; k];
        for _ in 0..count {
            out.push(Word(cur.clone()));
            // odometer increment
            for pos in (0..k).rev() {
                cur[pos] += 1;
                if (cur[pos] as usize) < d {
                    break;
                }
                cur[pos] = 0;
            }
        }
        return Ok(out);
    }

    let mut out = Vec::new();
    let mut stack: Vec<u8> = Vec::with_capacity(k);
    fn extend(
        spec: &ShiftSpec,
        k: usize,
        stack: &mut Vec<u8>,
        out: &mut Vec<Word>,
    ) -> Result<()> {
        if stack.len() == k {
            spec.check_cap("word enumeration", out.len() + 1)?;
            out.push(Word(stack.clone()));
            return Ok(());
        }
        for b in 0..spec.alphabet_size as u8 {
            if spec.allowed(stack, b) {
                stack.push(b);
                extend(spec, k, stack, out)?;
                stack.pop();
            }
        }
        Ok(())
    }
    extend(spec, k, &mut stack, &mut out)?;
    Ok(out)
}

/// Position of `w` inside a lexicographically sorted word list.
pub(crate) fn position(words: &[Word], w: &[u8]) -> Option<usize> {
    words.binary_search_by(|probe| probe.symbols().cmp(w)).ok()
}

/// The de Bruijn successor of `w` under `symbol`: drop the first symbol and
/// append `symbol`.
pub(crate) fn shift_append(w: &[u8], symbol: u8) -> Vec<u8> {
    let mut next = w[1..].to_vec();
    next.push(symbol);
    next
}
