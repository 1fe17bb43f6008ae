use crate::error::{Error, Result};
use crate::symbolic::{enumerate_words, position, shift_append, ShiftSpec, Word};

/// Tolerances used when validating measures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureTolerances {
    /// Total mass and row sums.
    pub normalization: f64,
    /// `||pi P - pi||_1` and prefix/suffix marginal consistency.
    pub stationarity: f64,
}

impl Default for MeasureTolerances {
    fn default() -> Self {
        MeasureTolerances {
            normalization: 1e-12,
            stationarity: 1e-10,
        }
    }
}

/// A probability vector over the allowed words of one length.
#[derive(Clone, Debug, PartialEq)]
pub struct WordDistribution {
    spec: ShiftSpec,
    depth: usize,
    words: Vec<Word>,
    weights: Vec<f64>,
}

impl WordDistribution {
    /// `weights` must be aligned with `enumerate_words(spec, depth)`.
    pub fn new(spec: &ShiftSpec, depth: usize, weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(spec, depth, weights, MeasureTolerances::default().normalization)
    }

    pub fn with_tolerance(spec: &ShiftSpec, depth: usize, weights: Vec<f64>, tol: f64) -> Result<Self> {
        let words = enumerate_words(spec, depth)?;
        if words.len() != weights.len() {
            return Err(Error::InvalidMeasure {
                constraint: "table size",
                detail: format!("expected {} weights, got {}", words.len(), weights.len()),
            });
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMeasure {
                constraint: "nonnegativity",
                detail: format!("weight of `{}` is {}", words[i], weights[i]),
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidMeasure {
                constraint: "normalization",
                detail: format!("weights sum to {total}"),
            });
        }
        Ok(WordDistribution {
            spec: spec.clone(),
            depth,
            words,
            weights,
        })
    }

    /// Convex combination `sum_i c_i p_i` of distributions on the same words.
    pub fn mixture(parts: &[(f64, &WordDistribution)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidMeasure {
                constraint: "mixture",
                detail: "no components".into(),
            })?;
        let mut weights = vec![0.0; first.weights.len()];
        for (c, p) in parts {
            if p.spec != first.spec || p.depth != first.depth {
                return Err(Error::SpecMismatch("mixture components differ".into()));
            }
            for (w, v) in weights.iter_mut().zip(&p.weights) {
                *w += c * v;
            }
        }
        Self::with_tolerance(&first.spec, first.depth, weights, 1e-10)
    }

    pub fn spec(&self) -> &ShiftSpec {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, w: &[u8]) -> Option<f64> {
        position(&self.words, w).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.words.iter().zip(self.weights.iter().copied())
    }

    /// Law of the first `k` symbols.
    pub fn prefix_marginal(&self, k: usize) -> Result<WordDistribution> {
        self.project(k, |w| &w[..k])
    }

    /// Law of the last `k` symbols.
    pub fn suffix_marginal(&self, k: usize) -> Result<WordDistribution> {
        let n = self.depth;
        self.project(k, |w| &w[n - k..])
    }

    fn project<'a>(&'a self, k: usize, cut: impl Fn(&'a [u8]) -> &'a [u8]) -> Result<WordDistribution> {
        if k > self.depth || k == 0 {
            return Err(Error::DepthTooSmall {
                requested: k,
                minimum: 1,
            });
        }
        let target = enumerate_words(&self.spec, k)?;
        let mut weights = vec![0.0; target.len()];
        for (w, p) in self.words.iter().zip(&self.weights) {
            let i = position(&target, cut(w.symbols())).ok_or_else(|| Error::InvalidMeasure {
                constraint: "support",
                detail: format!("sub-word of `{w}` is not allowed"),
            })?;
            weights[i] += p;
        }
        Ok(WordDistribution {
            spec: self.spec.clone(),
            depth: k,
            words: target,
            weights,
        })
    }

    /// Largest gap between the prefix and suffix `(depth-1)`-marginals.
    /// Zero exactly for the depth-`k` laws of shift-invariant measures.
    pub fn shift_inconsistency(&self) -> f64 {
        if self.depth < 2 {
            return 0.0;
        }
        let a = self.prefix_marginal(self.depth - 1).expect("depth >= 2");
        let b = self.suffix_marginal(self.depth - 1).expect("depth >= 2");
        a.weights
            .iter()
            .zip(&b.weights)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn l1_distance(&self, other: &WordDistribution) -> Option<f64> {
        if self.spec != other.spec || self.depth != other.depth {
            return None;
        }
        Some(self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum())
    }
}

/// A shift-invariant Markov measure of order `m`: a stationary law `pi` on
/// length-`m` words and transition probabilities `P(w, b)` of appending the
/// symbol `b` to `w` (moving to the de Bruijn successor `w_2 .. w_m b`).
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    spec: ShiftSpec,
    order: usize,
    words: Vec<Word>,
    pi: Vec<f64>,
    /// Row-major `words.len() x d`.
    transitions: Vec<f64>,
}

impl MarkovMeasure {
    /// Validates every invariant with the default tolerances.
    pub fn new(spec: &ShiftSpec, order: usize, pi: Vec<f64>, transitions: Vec<f64>) -> Result<Self> {
        Self::new_with_tolerances(spec, order, pi, transitions, &MeasureTolerances::default())
    }

    pub fn new_with_tolerances(
        spec: &ShiftSpec,
        order: usize,
        pi: Vec<f64>,
        transitions: Vec<f64>,
        tol: &MeasureTolerances,
    ) -> Result<Self> {
        if order < spec.min_chain_order() {
            return Err(Error::DepthTooSmall {
                requested: order,
                minimum: spec.min_chain_order(),
            });
        }
        let words = enumerate_words(spec, order)?;
        let d = spec.alphabet_size();
        let n = words.len();
        if pi.len() != n || transitions.len() != n * d {
            return Err(Error::InvalidMeasure {
                constraint: "table size",
                detail: format!(
                    "expected {n} stationary weights and {} transitions",
                    n * d
                ),
            });
        }
        if let Some(i) = pi.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidMeasure {
                constraint: "pi >= 0",
                detail: format!("pi(`{}`) = {}", words[i], pi[i]),
            });
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > tol.normalization {
            return Err(Error::InvalidMeasure {
                constraint: "sum(pi) = 1",
                detail: format!("sum is {total}"),
            });
        }
        for (i, w) in words.iter().enumerate() {
            let row = &transitions[i * d..(i + 1) * d];
            for (b, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidMeasure {
                        constraint: "P >= 0",
                        detail: format!("P(`{w}`, {b}) = {p}"),
                    });
                }
                if p > 0.0 && !spec.allowed(w.symbols(), b as u8) {
                    return Err(Error::InvalidMeasure {
                        constraint: "P supported on allowed edges",
                        detail: format!("P(`{w}`, {b}) = {p} on a forbidden transition"),
                    });
                }
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol.normalization {
                return Err(Error::InvalidMeasure {
                    constraint: "rows of P sum to 1",
                    detail: format!("row `{w}` sums to {s}"),
                });
            }
        }
        let measure = MarkovMeasure {
            spec: spec.clone(),
            order,
            words,
            pi,
            transitions,
        };
        let residual = measure.stationarity_residual();
        if residual > tol.stationarity {
            return Err(Error::InvalidMeasure {
                constraint: "stationarity ||pi P - pi||_1",
                detail: format!("residual {residual:e}"),
            });
        }
        if order >= 2 {
            let pi_dist = WordDistribution {
                spec: spec.clone(),
                depth: order,
                words: measure.words.clone(),
                weights: measure.pi.clone(),
            };
            let gap = pi_dist.shift_inconsistency();
            if gap > tol.stationarity {
                return Err(Error::InvalidMeasure {
                    constraint: "prefix/suffix marginal consistency",
                    detail: format!("gap {gap:e}"),
                });
            }
        }
        Ok(measure)
    }

    /// Builds the chain from its transitions, solving for a stationary law.
    pub fn from_transitions(spec: &ShiftSpec, order: usize, transitions: Vec<f64>) -> Result<Self> {
        let words = enumerate_words(spec, order)?;
        let d = spec.alphabet_size();
        if transitions.len() != words.len() * d {
            return Err(Error::InvalidMeasure {
                constraint: "table size",
                detail: format!("expected {} transitions", words.len() * d),
            });
        }
        let succ = successor_table(spec, &words);
        let pi = stationary_vector(&transitions, &succ, d);
        Self::new(spec, order, pi, transitions)
    }

    /// Builds the chain from stationary edge frequencies `f(w b)` on the
    /// allowed words of length `order + 1`. Rows without mass get the
    /// uniform distribution over allowed successors.
    pub fn from_edge_frequencies(spec: &ShiftSpec, order: usize, freq: &[f64]) -> Result<Self> {
        let words = enumerate_words(spec, order)?;
        let edges = enumerate_words(spec, order + 1)?;
        if freq.len() != edges.len() {
            return Err(Error::InvalidMeasure {
                constraint: "table size",
                detail: format!("expected {} edge weights, got {}", edges.len(), freq.len()),
            });
        }
        let d = spec.alphabet_size();
        let total: f64 = freq.iter().map(|f| f.max(0.0)).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure {
                constraint: "sum(f) = 1",
                detail: format!("edge weights sum to {total}"),
            });
        }
        let mut pi = vec![0.0; words.len()];
        let mut transitions = vec![0.0; words.len() * d];
        for (e, &f) in edges.iter().zip(freq) {
            let f = f.max(0.0) / total;
            let i = position(&words, e.prefix(order)).expect("prefix of an allowed edge");
            let b = e.symbols()[order] as usize;
            pi[i] += f;
            transitions[i * d + b] += f;
        }
        for (i, w) in words.iter().enumerate() {
            let row = &mut transitions[i * d..(i + 1) * d];
            if pi[i] > 0.0 {
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= s);
            } else {
                fill_uniform_row(spec, w.symbols(), row);
            }
        }
        let edge_dist = WordDistribution::with_tolerance(spec, order + 1, freq.iter().map(|f| f.max(0.0) / total).collect(), 1e-9)?;
        let imbalance = edge_dist.prefix_marginal(order)?.l1_distance(&edge_dist.suffix_marginal(order)?).unwrap();
        if imbalance > 1e-9 {
            return Err(Error::InvalidMeasure {
                constraint: "flow balance",
                detail: format!("inflow and outflow differ by {imbalance:e} in l1"),
            });
        }
        // Recompute pi exactly from the suffix side so pi P = pi holds to rounding.
        let succ = successor_table(spec, &words);
        let mut pi_next = vec![0.0; words.len()];
        for i in 0..words.len() {
            for b in 0..d {
                if let Some(j) = succ[i * d + b] {
                    pi_next[j] += pi[i] * transitions[i * d + b];
                }
            }
        }
        let pi: Vec<f64> = pi.iter().zip(&pi_next).map(|(a, b)| 0.5 * (a + b)).collect();
        let s: f64 = pi.iter().sum();
        let pi = pi.into_iter().map(|p| p / s).collect();
        Self::new_with_tolerances(
            spec,
            order,
            pi,
            transitions,
            &MeasureTolerances {
                normalization: 1e-12,
                stationarity: 1e-9,
            },
        )
    }

    /// The canonical invariant completion of a shift-consistent depth-`k`
    /// law: the order-`(k-1)` chain with `P(w, b) = q(w b) / q(w)` (an
    /// i.i.d. chain when `k = 1`).
    pub fn from_marginal(dist: &WordDistribution) -> Result<Self> {
        let spec = dist.spec();
        let k = dist.depth();
        if k == 1 {
            if !spec.is_full_shift() {
                return Err(Error::DepthTooSmall {
                    requested: 1,
                    minimum: spec.order() + 1,
                });
            }
            return Self::bernoulli(spec, dist.weights());
        }
        let order = (k - 1).max(spec.min_chain_order());
        if order != k - 1 {
            return Err(Error::DepthTooSmall {
                requested: k,
                minimum: order + 1,
            });
        }
        let gap = dist.shift_inconsistency();
        if gap > 1e-9 {
            return Err(Error::InvalidMeasure {
                constraint: "shift consistency",
                detail: format!("prefix and suffix marginals differ by {gap:e}"),
            });
        }
        Self::from_edge_frequencies(spec, order, dist.weights())
    }

    /// The i.i.d. measure with one-symbol law `probs`, as an order-1 chain.
    pub fn bernoulli(spec: &ShiftSpec, probs: &[f64]) -> Result<Self> {
        if !spec.is_full_shift() {
            return Err(Error::SpecMismatch(
                "Bernoulli measures require a full shift".into(),
            ));
        }
        let d = spec.alphabet_size();
        if probs.len() != d {
            return Err(Error::InvalidMeasure {
                constraint: "table size",
                detail: format!("expected {d} symbol probabilities"),
            });
        }
        let total: f64 = probs.iter().sum();
        let p: Vec<f64> = probs.iter().map(|v| v / total).collect();
        let transitions = (0..d).flat_map(|_| p.iter().copied()).collect();
        Self::new(spec, 1, p, transitions)
    }

    pub fn uniform_bernoulli(spec: &ShiftSpec) -> Result<Self> {
        let d = spec.alphabet_size();
        Self::bernoulli(spec, &vec![1.0 / d as f64; d])
    }

    /// The point mass on the constant sequence `s s s ...`.
    pub fn dirac(spec: &ShiftSpec, symbol: u8) -> Result<Self> {
        Self::periodic(spec, &Word::constant(symbol, 1))
    }

    /// The invariant measure on the periodic orbit of `u u u ...`.
    pub fn periodic(spec: &ShiftSpec, cycle: &Word) -> Result<Self> {
        let order = spec.min_chain_order();
        let p = cycle.len();
        if p == 0 {
            return Err(Error::InvalidWord {
                word: String::new(),
                reason: "empty cycle".into(),
            });
        }
        let sym = cycle.symbols();
        let window: Vec<u8> = (0..order + 1 + p).map(|i| sym[i % p]).collect();
        if !spec.is_allowed_word(&window) {
            return Err(Error::InvalidWord {
                word: cycle.to_string(),
                reason: "periodic orbit contains a forbidden block".into(),
            });
        }
        let edges = enumerate_words(spec, order + 1)?;
        let mut freq = vec![0.0; edges.len()];
        for start in 0..p {
            let e: Vec<u8> = (0..order + 1).map(|i| sym[(start + i) % p]).collect();
            freq[position(&edges, &e).expect("allowed window")] += 1.0 / p as f64;
        }
        Self::from_edge_frequencies(spec, order, &freq)
    }

    pub fn spec(&self) -> &ShiftSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// `P(w, b)` for the `i`-th length-`order` word.
    pub fn transition(&self, i: usize, symbol: usize) -> f64 {
        self.transitions[i * self.spec.alphabet_size() + symbol]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.spec.alphabet_size();
        &self.transitions[i * d..(i + 1) * d]
    }

    /// `||pi P - pi||_1`.
    pub fn stationarity_residual(&self) -> f64 {
        let d = self.spec.alphabet_size();
        let succ = successor_table(&self.spec, &self.words);
        let mut next = vec![0.0; self.pi.len()];
        for i in 0..self.words.len() {
            for b in 0..d {
                let p = self.transitions[i * d + b];
                if p > 0.0 {
                    match succ[i * d + b] {
                        Some(j) => next[j] += self.pi[i] * p,
                        None => return f64::INFINITY,
                    }
                }
            }
        }
        next.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Stationary edge frequencies `pi(w) P(w, b)`, i.e. the law of the
    /// first `order + 1` symbols.
    pub fn edge_frequencies(&self) -> Result<WordDistribution> {
        marginal(self, self.order + 1)
    }

    /// The same measure written as a chain of higher order.
    pub fn lift(&self, order: usize) -> Result<Self> {
        if order < self.order {
            return Err(Error::DepthTooSmall {
                requested: order,
                minimum: self.order,
            });
        }
        if order == self.order {
            return Ok(self.clone());
        }
        let pi = marginal(self, order)?;
        let d = self.spec.alphabet_size();
        let mut transitions = Vec::with_capacity(pi.words().len() * d);
        for w in pi.words() {
            let i = position(&self.words, w.suffix(self.order)).expect("suffix of an allowed word");
            for b in 0..d {
                let p = if self.spec.allowed(w.symbols(), b as u8) {
                    self.transition(i, b)
                } else {
                    0.0
                };
                transitions.push(p);
            }
            let row_start = transitions.len() - d;
            let row = &mut transitions[row_start..];
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|p| *p /= s);
            } else {
                fill_uniform_row(&self.spec, w.symbols(), row);
            }
        }
        Self::new_with_tolerances(
            &self.spec,
            order,
            pi.weights,
            transitions,
            &MeasureTolerances {
                normalization: 1e-12,
                stationarity: 1e-9,
            },
        )
    }
}

pub(crate) fn fill_uniform_row(spec: &ShiftSpec, w: &[u8], row: &mut [f64]) {
    let allowed: Vec<usize> = (0..row.len()).filter(|&b| spec.allowed(w, b as u8)).collect();
    for (b, p) in row.iter_mut().enumerate() {
        *p = if allowed.contains(&b) {
            1.0 / allowed.len() as f64
        } else {
            0.0
        };
    }
}

/// `succ[i * d + b]`: index of the successor of word `i` under symbol `b`.
pub(crate) fn successor_table(spec: &ShiftSpec, words: &[Word]) -> Vec<Option<usize>> {
    let d = spec.alphabet_size();
    let mut out = Vec::with_capacity(words.len() * d);
    for w in words {
        for b in 0..d as u8 {
            out.push(if spec.allowed(w.symbols(), b) {
                position(words, &shift_append(w.symbols(), b))
            } else {
                None
            });
        }
    }
    out
}

/// Solves `pi P = pi, sum pi = 1` by Gaussian elimination, falling back to
/// lazy power iteration when the chain is reducible.
fn stationary_vector(transitions: &[f64], succ: &[Option<usize>], d: usize) -> Vec<f64> {
    let n = succ.len() / d;
    // rows of (P^T - I), last row replaced by normalisation
    let mut a = vec![0.0; n * (n + 1)];
    for i in 0..n {
        for b in 0..d {
            if let Some(j) = succ[i * d + b] {
                a[j * (n + 1) + i] += transitions[i * d + b];
            }
        }
        a[i * (n + 1) + i] -= 1.0;
    }
    for i in 0..n {
        a[(n - 1) * (n + 1) + i] = 1.0;
    }
    a[(n - 1) * (n + 1) + n] = 1.0;

    let w = n + 1;
    let mut singular = false;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &k| a[i * w + c].abs().total_cmp(&a[k * w + c].abs()))
            .unwrap();
        if a[p * w + c].abs() < 1e-12 {
            singular = true;
            break;
        }
        for k in 0..w {
            a.swap(p * w + k, c * w + k);
        }
        let piv = a[c * w + c];
        for k in c..w {
            a[c * w + k] /= piv;
        }
        for i in 0..n {
            if i != c {
                let f = a[i * w + c];
                if f != 0.0 {
                    for k in c..w {
                        a[i * w + k] -= f * a[c * w + k];
                    }
                }
            }
        }
    }
    let mut pi: Vec<f64> = if singular {
        lazy_power_iteration(transitions, succ, d)
    } else {
        (0..n).map(|i| a[i * w + n].max(0.0)).collect()
    };
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);
    pi
}

fn lazy_power_iteration(transitions: &[f64], succ: &[Option<usize>], d: usize) -> Vec<f64> {
    let n = succ.len() / d;
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..200_000 {
        let mut next: Vec<f64> = pi.iter().map(|p| 0.5 * p).collect();
        for i in 0..n {
            for b in 0..d {
                if let Some(j) = succ[i * d + b] {
                    next[j] += 0.5 * pi[i] * transitions[i * d + b];
                }
            }
        }
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta < 1e-15 {
            break;
        }
    }
    pi
}

/// Exact law of the first `k` symbols under `mu`.
pub fn marginal(mu: &MarkovMeasure, k: usize) -> Result<WordDistribution> {
    if k == 0 {
        return Err(Error::DepthTooSmall {
            requested: 0,
            minimum: 1,
        });
    }
    let m = mu.order;
    let pi_dist = WordDistribution {
        spec: mu.spec.clone(),
        depth: m,
        words: mu.words.clone(),
        weights: mu.pi.clone(),
    };
    if k <= m {
        return pi_dist.prefix_marginal(k);
    }
    let spec = &mu.spec;
    let d = spec.alphabet_size();
    let mut words = mu.words.clone();
    let mut weights = mu.pi.clone();
    for len in m..k {
        let expected = words.len().saturating_mul(d);
        spec.check_cap("marginal", expected.min(spec.word_cap() + 1).max(words.len()))?;
        let mut next_words = Vec::with_capacity(expected);
        let mut next_weights = Vec::with_capacity(expected);
        for (w, &q) in words.iter().zip(&weights) {
            let state = position(&mu.words, w.suffix(m)).expect("suffix of allowed word");
            for b in 0..d as u8 {
                if spec.allowed(w.symbols(), b) {
                    let mut s = w.symbols().to_vec();
                    s.push(b);
                    next_words.push(Word::new(s));
                    next_weights.push(q * mu.transition(state, b as usize));
                }
            }
        }
        spec.check_cap("marginal", next_words.len())?;
        debug_assert!(next_words.iter().all(|w| w.len() == len + 1));
        words = next_words;
        weights = next_weights;
    }
    Ok(WordDistribution {
        spec: spec.clone(),
        depth: k,
        words,
        weights,
    })
}

/// Entropy rate `-sum_w pi(w) sum_b P(w,b) log P(w,b)` (natural log).
pub fn entropy(mu: &MarkovMeasure) -> f64 {
    let d = mu.spec.alphabet_size();
    let mut h = 0.0;
    for (i, &p) in mu.pi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row_entropy: f64 = mu.transitions[i * d..(i + 1) * d]
            .iter()
            .filter(|&&q| q > 0.0)
            .map(|&q| -q * q.ln())
            .sum();
        h += p * row_entropy;
    }
    h.max(0.0)
}
