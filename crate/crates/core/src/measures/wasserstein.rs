use serde::{Deserialize, Serialize};

use super::markov::{marginal, MarkovMeasure, WordDistribution};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation, Sense, VarKind};
use crate::symbolic::Word;

/// Default bound on the number of words in a Kantorovich problem.
pub const DEFAULT_W1_WORD_CAP: usize = 256;

/// Certified enclosure `lo <= W1 <= hi` computed from depth-`depth` laws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct W1Interval {
    pub lo: f64,
    pub hi: f64,
    pub depth: usize,
}

impl W1Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `W1` enclosure between two measures from their depth-`k` marginals.
///
/// `lo` transports with the exact distance between distinct words and zero
/// cost on equal words; `hi` charges the cylinder diameter `theta^k` on equal
/// words, so `hi - lo <= theta^k`.
pub fn wasserstein1(mu: &MarkovMeasure, nu: &MarkovMeasure, k: usize) -> Result<W1Interval> {
    if mu.spec() != nu.spec() {
        return Err(Error::SpecMismatch("wasserstein1: shift specifications differ".into()));
    }
    check_w1_cap(mu.spec().alphabet_size(), k, DEFAULT_W1_WORD_CAP)?;
    let p = marginal(mu, k)?;
    let q = marginal(nu, k)?;
    wasserstein1_distributions(&p, &q)
}

/// The same enclosure for arbitrary (not necessarily shift-consistent) word
/// distributions of equal depth.
pub fn wasserstein1_distributions(p: &WordDistribution, q: &WordDistribution) -> Result<W1Interval> {
    wasserstein1_distributions_capped(p, q, DEFAULT_W1_WORD_CAP)
}

pub fn wasserstein1_distributions_capped(
    p: &WordDistribution,
    q: &WordDistribution,
    cap: usize,
) -> Result<W1Interval> {
    if p.spec() != q.spec() || p.depth() != q.depth() {
        return Err(Error::SpecMismatch(
            "wasserstein1: distributions live on different word spaces".into(),
        ));
    }
    let k = p.depth();
    check_w1_cap(p.spec().alphabet_size(), k, cap)?;
    let diag = p.spec().metric().cylinder_diameter(k);
    let lo = kantorovich(p, q, 0.0)?;
    let hi = kantorovich(p, q, diag)?;
    Ok(W1Interval { lo, hi: hi.max(lo), depth: k })
}

/// Enclosure that exploits the Markov structure of both measures: two
/// chains sharing a state are coupled step by step, disagreeing at each step
/// with probability at most `delta`, the largest total-variation gap between
/// their transition rows on commonly charged states. This gives the tail
/// bound `theta^k * delta / (1 - theta (1 - delta))` on equal words, which
/// vanishes for identical measures. Requires `k` at least both orders.
pub fn wasserstein1_markov(mu: &MarkovMeasure, nu: &MarkovMeasure, k: usize) -> Result<W1Interval> {
    wasserstein1_markov_capped(mu, nu, k, DEFAULT_W1_WORD_CAP)
}

pub fn wasserstein1_markov_capped(mu: &MarkovMeasure, nu: &MarkovMeasure, k: usize, cap: usize) -> Result<W1Interval> {
    if mu.spec() != nu.spec() {
        return Err(Error::SpecMismatch("wasserstein1: shift specifications differ".into()));
    }
    let order = mu.order().max(nu.order());
    if k < order {
        return Err(Error::DepthTooSmall {
            requested: k,
            minimum: order,
        });
    }
    check_w1_cap(mu.spec().alphabet_size(), k, cap)?;
    let a = mu.lift(order)?;
    let b = nu.lift(order)?;
    let mut delta: f64 = 0.0;
    for i in 0..a.words().len() {
        if a.pi()[i] > 0.0 && b.pi()[i] > 0.0 {
            let tv: f64 = a.row(i).iter().zip(b.row(i)).map(|(x, y)| (x - y).abs()).sum::<f64>() * 0.5;
            delta = delta.max(tv);
        }
    }
    let delta = delta.min(1.0);
    let theta = mu.spec().metric().base;
    let tail = delta / (1.0 - theta * (1.0 - delta));
    let p = marginal(mu, k)?;
    let q = marginal(nu, k)?;
    let lo = kantorovich(&p, &q, 0.0)?;
    let hi = if tail == 0.0 {
        lo
    } else {
        kantorovich(&p, &q, mu.spec().metric().cylinder_diameter(k) * tail)?
    };
    Ok(W1Interval { lo, hi: hi.max(lo), depth: k })
}

fn check_w1_cap(d: usize, k: usize, cap: usize) -> Result<()> {
    let count = (d as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::CapExceeded {
            what: "Kantorovich problem",
            count: count.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    Ok(())
}

/// Optimal transport cost between `p` and `q` with ground cost the word
/// metric off the diagonal and `diag <= theta^k` on it. The word metric is an
/// ultrametric in which distinct depth-`k` words are at least `theta^(k-1)`
/// apart, so keeping shared mass in place is optimal: it costs `diag` per
/// unit and only the residual masses, which have disjoint supports, go
/// through the linear program.
fn kantorovich(p: &WordDistribution, q: &WordDistribution, diag: f64) -> Result<f64> {
    let metric = p.spec().metric();
    let mut shared = 0.0;
    let mut rows: Vec<(&Word, f64)> = Vec::new();
    let mut cols: Vec<(&Word, f64)> = Vec::new();
    for ((w, a), &b) in p.iter().zip(q.weights()) {
        let m = a.min(b);
        shared += m;
        if a > m {
            rows.push((w, a - m));
        }
        if b > m {
            cols.push((w, b - m));
        }
    }
    if rows.is_empty() || cols.is_empty() {
        return Ok(diag * shared);
    }
    let mut lp = LinearProgram::new(Sense::Minimize);
    let mut costs = Vec::with_capacity(rows.len() * cols.len());
    for (wx, _) in &rows {
        for (wy, _) in &cols {
            costs.push(metric.exact_distance(wx.symbols(), wy.symbols()));
        }
    }
    let base = lp.add_vars(VarKind::NonNegative, &costs);
    let nc = cols.len();
    for (i, (_, w)) in rows.iter().enumerate() {
        lp.add_constraint((0..nc).map(|j| (base + i * nc + j, 1.0)).collect(), Relation::Eq, *w);
    }
    for (j, (_, w)) in cols.iter().enumerate() {
        lp.add_constraint(
            (0..rows.len()).map(|i| (base + i * nc + j, 1.0)).collect(),
            Relation::Eq,
            *w,
        );
    }
    let sol = lp.solve()?;
    Ok(sol.objective.max(0.0) + diag * shared)
}
