//! Cooperative play through ergodic transport: player 1 fixes an optimal
//! invariant measure `mu` for a potential of `x` alone, then a joint plan on
//! `X x Y` with `x`-projection `mu` and invariant `y`-projection maximizes
//! `int A2 dpi`. At depth `k` the plan is a table over word pairs and the
//! problem is one linear program.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ergodic::{br_ergodic, BestResponseResult};
use crate::lp::{LinearProgram, Relation, Sense, VarKind};
use crate::measures::{induced_potential_y, marginal, MarkovMeasure, WordDistribution};
use crate::symbolic::{enumerate_words, position, CylinderFunction, JointCylinderFunction, ShiftSpec, Word};

/// Default bound on the number of plan entries.
pub const DEFAULT_PLAN_CAP: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportOptions {
    /// Also require the plan's pair-word law to be shift-consistent, i.e. the
    /// plan to come from a jointly invariant measure. Off by default: only
    /// the two projections are constrained.
    pub joint_stationary: bool,
    pub max_entries: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            joint_stationary: false,
            max_entries: DEFAULT_PLAN_CAP,
        }
    }
}

/// Weights `q(wx, wy)` on pairs of length-`depth` words.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    spec_x: ShiftSpec,
    spec_y: ShiftSpec,
    depth: usize,
    words_x: Vec<Word>,
    words_y: Vec<Word>,
    /// Row-major over `(x-word, y-word)`.
    q: Vec<f64>,
}

impl TransportPlan {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn spec_x(&self) -> &ShiftSpec {
        &self.spec_x
    }

    pub fn spec_y(&self) -> &ShiftSpec {
        &self.spec_y
    }

    pub fn weight(&self, wx: &[u8], wy: &[u8]) -> Option<f64> {
        let i = position(&self.words_x, wx)?;
        let j = position(&self.words_y, wy)?;
        Some(self.q[i * self.words_y.len() + j])
    }

    /// Nonzero entries in word order.
    pub fn entries(&self) -> impl Iterator<Item = (&Word, &Word, f64)> {
        let ny = self.words_y.len();
        self.q
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(idx, v)| (&self.words_x[idx / ny], &self.words_y[idx % ny], *v))
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.q.chunks(self.words_y.len()).map(|r| r.iter().sum()).collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        let ny = self.words_y.len();
        let mut out = vec![0.0; ny];
        for (idx, v) in self.q.iter().enumerate() {
            out[idx % ny] += v;
        }
        out
    }

    /// `sum q(wx, wy) A(wx, wy)` for a table refined to the plan's depth.
    pub fn integrate(&self, a: &JointCylinderFunction) -> Result<f64> {
        let a = a.refine(self.depth, self.depth)?;
        Ok(self.q.iter().zip(a.table()).map(|(q, v)| q * v).sum())
    }
}

impl Serialize for TransportPlan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            x: String,
            y: String,
            weight: f64,
        }
        let entries: Vec<Entry> = self
            .entries()
            .map(|(x, y, weight)| Entry {
                x: x.to_string(),
                y: y.to_string(),
                weight,
            })
            .collect();
        let mut st = s.serialize_struct("TransportPlan", 2)?;
        st.serialize_field("depth", &self.depth)?;
        st.serialize_field("entries", &entries)?;
        st.end()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportResult {
    pub plan: TransportPlan,
    /// `int A2 d(plan)`.
    pub value: f64,
    pub y_marginal: WordDistribution,
    /// Best payoff player 2 can reach alone against `mu`, i.e. over product
    /// plans `mu x nu`.
    pub benchmark: f64,
    /// `value - benchmark`, never negative up to solver tolerance.
    pub gain: f64,
}

impl TransportResult {
    /// An invariant measure with the plan's `y`-projection at this depth:
    /// the canonical completion of `y_marginal`.
    pub fn y_measure(&self) -> Result<MarkovMeasure> {
        MarkovMeasure::from_marginal(&self.y_marginal)
    }
}

/// Player 1's optimal strategy: an ergodic best response to a potential of
/// `x` alone.
pub fn solve_player1(a1: &CylinderFunction) -> Result<BestResponseResult> {
    br_ergodic(a1)
}

/// Smallest plan depth for `a2`: both table depths, and long enough for the
/// forbidden blocks of the `y`-shift to be visible in a word.
pub fn minimum_depth(a2: &JointCylinderFunction) -> usize {
    let spec_y = a2.spec_y();
    let blocks = if spec_y.is_full_shift() { 1 } else { spec_y.order() + 1 };
    a2.depth_x().max(a2.depth_y()).max(blocks)
}

pub fn solve_cooperative(a2: &JointCylinderFunction, mu: &MarkovMeasure, k: usize) -> Result<TransportResult> {
    solve_cooperative_with(a2, mu, k, &TransportOptions::default())
}

pub fn solve_cooperative_with(
    a2: &JointCylinderFunction,
    mu: &MarkovMeasure,
    k: usize,
    opts: &TransportOptions,
) -> Result<TransportResult> {
    if a2.spec_x() != mu.spec() {
        return Err(Error::SpecMismatch("transport: mu lives on a different shift".into()));
    }
    let (spec_x, spec_y) = (a2.spec_x().clone(), a2.spec_y().clone());
    let min_depth = minimum_depth(a2);
    if k < min_depth {
        return Err(Error::DepthTooSmall {
            requested: k,
            minimum: min_depth,
        });
    }
    let a = a2.refine(k, k)?;
    let px = marginal(mu, k)?;
    let words_x = px.words().to_vec();
    let words_y = enumerate_words(&spec_y, k)?;
    let (nx, ny) = (words_x.len(), words_y.len());
    let count = nx.saturating_mul(ny);
    if count > opts.max_entries {
        return Err(Error::CapExceeded {
            what: "transport plan",
            count,
            cap: opts.max_entries,
        });
    }

    // Only x-words charged by mu carry plan mass.
    let rows: Vec<usize> = (0..nx).filter(|&i| px.weights()[i] > 0.0).collect();
    let mut lp = LinearProgram::new(Sense::Maximize);
    let mut var = vec![None; nx * ny];
    for &i in &rows {
        for j in 0..ny {
            var[i * ny + j] = Some(lp.add_var(VarKind::NonNegative, a.get(i, j)));
        }
    }
    for &i in &rows {
        let row = (0..ny).map(|j| (var[i * ny + j].unwrap(), 1.0)).collect();
        lp.add_constraint(row, Relation::Eq, px.weights()[i]);
    }
    if k >= 2 {
        // prefix and suffix (k-1)-marginals of the y-law agree
        let shorter = enumerate_words(&spec_y, k - 1)?;
        let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); shorter.len()];
        for (j, wy) in words_y.iter().enumerate() {
            let p = position(&shorter, wy.prefix(k - 1)).unwrap();
            let s = position(&shorter, wy.suffix(k - 1)).unwrap();
            if p == s {
                continue;
            }
            for &i in &rows {
                let v = var[i * ny + j].unwrap();
                balance[p].push((v, 1.0));
                balance[s].push((v, -1.0));
            }
        }
        for row in balance.into_iter().filter(|r| !r.is_empty()) {
            lp.add_constraint(row, Relation::Eq, 0.0);
        }
        if opts.joint_stationary {
            add_joint_stationarity(&mut lp, &var, &words_x, &words_y, &spec_x, &spec_y, k)?;
        }
    }
    let sol = lp.solve()?;

    let mut q = vec![0.0; nx * ny];
    for (idx, v) in var.iter().enumerate() {
        if let Some(v) = v {
            q[idx] = sol.x[*v].max(0.0);
        }
    }
    let plan = TransportPlan {
        spec_x,
        spec_y: spec_y.clone(),
        depth: k,
        words_x,
        words_y,
        q,
    };
    let y_weights = plan.y_marginal();
    let total: f64 = y_weights.iter().sum();
    let y_marginal = WordDistribution::with_tolerance(&spec_y, k, y_weights.iter().map(|v| v / total).collect(), 1e-9)?;
    let value = plan.integrate(a2)?;
    let benchmark = br_ergodic(&induced_potential_y(a2, mu)?)?.value;
    Ok(TransportResult {
        plan,
        value,
        y_marginal,
        benchmark,
        gain: value - benchmark,
    })
}

/// Prefix/suffix consistency of the pair-word law: for every pair of
/// `(k-1)`-words `(u, v)`, `q(u., v.) = q(.u, .v)`.
fn add_joint_stationarity(
    lp: &mut LinearProgram,
    var: &[Option<usize>],
    words_x: &[Word],
    words_y: &[Word],
    spec_x: &ShiftSpec,
    spec_y: &ShiftSpec,
    k: usize,
) -> Result<()> {
    let sx = enumerate_words(spec_x, k - 1)?;
    let sy = enumerate_words(spec_y, k - 1)?;
    let ny = words_y.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sx.len() * sy.len()];
    for (i, wx) in words_x.iter().enumerate() {
        for (j, wy) in words_y.iter().enumerate() {
            let pre = position(&sx, wx.prefix(k - 1)).unwrap() * sy.len() + position(&sy, wy.prefix(k - 1)).unwrap();
            let suf = position(&sx, wx.suffix(k - 1)).unwrap() * sy.len() + position(&sy, wy.suffix(k - 1)).unwrap();
            if pre == suf {
                continue;
            }
            // pairs whose x-word has no mass are fixed at zero
            if let Some(v) = var[i * ny + j] {
                rows[pre].push((v, 1.0));
                rows[suf].push((v, -1.0));
            }
        }
    }
    for row in rows.into_iter().filter(|r| !r.is_empty()) {
        lp.add_constraint(row, Relation::Eq, 0.0);
    }
    Ok(())
}
