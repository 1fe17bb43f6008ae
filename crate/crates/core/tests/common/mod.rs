//! Independent reference computations shared by the integration tests. None
//! of these call the solvers they are compared against.

#![allow(dead_code)]

use std::collections::HashMap;

use ergame::measures::{MarkovMeasure, WordDistribution};
use ergame::symbolic::{CylinderFunction, ShiftSpec, Word};
use rand::Rng;

pub fn full(d: usize) -> ShiftSpec {
    ShiftSpec::full(d).unwrap()
}

/// Every word of length `len` over `d` symbols, lexicographic, ignoring any
/// forbidden blocks.
pub fn all_words(d: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..d as u8).map(move |b| {
                    let mut v = w.clone();
                    v.push(b);
                    v
                })
            })
            .collect();
    }
    out
}

/// `theta^(n)` with `n` the zero-based first disagreement, 0 on equal words.
pub fn distance(w: &[u8], v: &[u8], theta: f64) -> f64 {
    match w.iter().zip(v).position(|(a, b)| a != b) {
        Some(n) => theta.powi(n as i32),
        None => 0.0,
    }
}

/// Pairwise Lipschitz constant of a table indexed by equal-length words.
pub fn pairwise_lipschitz(words: &[Word], values: &[f64], theta: f64) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..words.len() {
        for j in (i + 1)..words.len() {
            let d = distance(words[i].symbols(), words[j].symbols(), theta);
            best = best.max((values[i] - values[j]).abs() / d);
        }
    }
    best
}

/// Maximum of the Birkhoff average of `psi` over periodic points whose
/// period is at most `max_period`, found by listing every periodic word.
/// On a full shift with a depth-`k` potential every simple cycle of the
/// order-`(k-1)` de Bruijn graph is such a word once `max_period >= d^(k-1)`.
pub fn periodic_max_mean(psi: &CylinderFunction, max_period: usize) -> f64 {
    let spec = psi.spec();
    let d = spec.alphabet_size();
    let k = psi.depth();
    let mut best = f64::NEG_INFINITY;
    for p in 1..=max_period {
        for w in all_words(d, p) {
            let window = |i: usize| -> Vec<u8> { (0..k).map(|t| w[(i + t) % p]).collect() };
            let cyclic: Vec<u8> = (0..p + spec.order()).map(|t| w[t % p]).collect();
            if !spec.is_allowed_word(&cyclic) {
                continue;
            }
            let total: f64 = (0..p).map(|i| psi.value(&window(i)).unwrap()).sum();
            best = best.max(total / p as f64);
        }
    }
    best
}

/// The ultrametric tree formula for the Kantorovich distance between two
/// depth-`k` word laws with zero cost on the diagonal: an edge into a node of
/// depth `j` has length `(theta^(j-1) - theta^j) / 2` for `j < k` and
/// `theta^(k-1) / 2` at the leaves, and carries the mass imbalance of the
/// cylinder below it.
pub fn tree_w1(p: &WordDistribution, q: &WordDistribution, theta: f64) -> f64 {
    let k = p.depth();
    let mut total = 0.0;
    for j in 1..=k {
        let len = if j < k {
            (theta.powi(j as i32 - 1) - theta.powi(j as i32)) / 2.0
        } else {
            theta.powi(k as i32 - 1) / 2.0
        };
        let mut imbalance: HashMap<Vec<u8>, f64> = HashMap::new();
        for ((w, a), b) in p.iter().zip(q.weights()) {
            *imbalance.entry(w.symbols()[..j].to_vec()).or_default() += a - b;
        }
        total += len * imbalance.values().map(|v| v.abs()).sum::<f64>();
    }
    total
}

pub fn total_variation(p: &WordDistribution, q: &WordDistribution) -> f64 {
    0.5 * p.weights().iter().zip(q.weights()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn sample_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap()
}

/// A sample path of `n` symbols started from the stationary law, together
/// with its log-probability under `mu`.
pub fn sample_path<R: Rng>(rng: &mut R, mu: &MarkovMeasure, n: usize) -> (Vec<u8>, f64) {
    let m = mu.order();
    let index: HashMap<&[u8], usize> = mu.words().iter().enumerate().map(|(i, w)| (w.symbols(), i)).collect();
    let mut state = sample_index(rng, mu.pi());
    let mut path = mu.words()[state].symbols().to_vec();
    let mut logp = mu.pi()[state].ln();
    while path.len() < n {
        let b = sample_index(rng, mu.row(state));
        logp += mu.row(state)[b].ln();
        path.push(b as u8);
        state = index[&path[path.len() - m..]];
    }
    (path, logp)
}
