//! Locally constant potentials: functions of the first `k` symbols of a
//! sequence, stored as tables aligned with [`enumerate_words`].
//!
//! A general Lipschitz potential `A` can be replaced by its depth-`k`
//! discretisation at sup-norm cost at most `Lip(A) * theta^k`; that
//! discretisation is left to the caller.

use super::{enumerate_words, position, MetricParams, ShiftSpec, Word};
use crate::error::{Error, Result};

/// A potential `psi: X -> R` depending on the first `depth` symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderFunction {
    spec: ShiftSpec,
    depth: usize,
    words: Vec<Word>,
    table: Vec<f64>,
}

impl CylinderFunction {
    /// Builds from a table aligned with `enumerate_words(spec, depth)`.
    pub fn from_table(spec: &ShiftSpec, depth: usize, table: Vec<f64>) -> Result<Self> {
        let words = enumerate_words(spec, depth)?;
        if words.len() != table.len() {
            return Err(Error::InvalidTable(format!(
                "expected {} entries for depth {depth}, got {}",
                words.len(),
                table.len()
            )));
        }
        if let Some(i) = table.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidTable(format!(
                "entry for `{}` is not finite",
                words[i]
            )));
        }
        Ok(CylinderFunction {
            spec: spec.clone(),
            depth,
            words,
            table,
        })
    }

    pub fn from_fn(spec: &ShiftSpec, depth: usize, f: impl Fn(&[u8]) -> f64) -> Result<Self> {
        let words = enumerate_words(spec, depth)?;
        let table = words.iter().map(|w| f(w.symbols())).collect();
        Self::from_table(spec, depth, table)
    }

    /// Builds from explicit `(word, value)` pairs. Every allowed word must be
    /// present exactly once; there are no implicit zeros.
    pub fn from_entries(
        spec: &ShiftSpec,
        depth: usize,
        entries: impl IntoIterator<Item = (Word, f64)>,
    ) -> Result<Self> {
        let words = enumerate_words(spec, depth)?;
        let mut table = vec![None; words.len()];
        for (w, v) in entries {
            let i = position(&words, w.symbols()).ok_or_else(|| {
                Error::InvalidTable(format!("`{w}` is not an allowed word of length {depth}"))
            })?;
            if table[i].replace(v).is_some() {
                return Err(Error::InvalidTable(format!("duplicate entry for `{w}`")));
            }
        }
        let table = table
            .into_iter()
            .zip(&words)
            .map(|(v, w)| v.ok_or_else(|| Error::InvalidTable(format!("missing entry for `{w}`"))))
            .collect::<Result<Vec<f64>>>()?;
        Self::from_table(spec, depth, table)
    }

    pub fn constant(spec: &ShiftSpec, depth: usize, c: f64) -> Result<Self> {
        Self::from_fn(spec, depth, |_| c)
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

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn value(&self, w: &[u8]) -> Option<f64> {
        position(&self.words, w).map(|i| self.table[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.words.iter().zip(self.table.iter().copied())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        CylinderFunction {
            table: self.table.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn scale(&self, t: f64) -> Self {
        self.map(|v| v * t)
    }

    /// Pointwise difference, both sides lifted to the common depth.
    pub fn sub(&self, other: &CylinderFunction) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch("potentials live on different shifts".into()));
        }
        let k = self.depth.max(other.depth);
        let a = refine(self, k)?;
        let b = refine(other, k)?;
        Ok(CylinderFunction {
            table: a.table.iter().zip(&b.table).map(|(x, y)| x - y).collect(),
            ..a
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.table.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.table.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Lifts `psi` to depth `k` by `psi'(w) = psi(prefix(w))`.
pub fn refine(psi: &CylinderFunction, k: usize) -> Result<CylinderFunction> {
    if k < psi.depth {
        return Err(Error::DepthTooSmall {
            requested: k,
            minimum: psi.depth,
        });
    }
    if k == psi.depth {
        return Ok(psi.clone());
    }
    let depth = psi.depth;
    CylinderFunction::from_fn(&psi.spec, k, |w| {
        psi.value(&w[..depth])
            .expect("prefix of an allowed word is allowed")
    })
}

/// Largest ratio `(max - min) / theta^p` over blocks of consecutive words
/// sharing a length-`p` prefix. On a lexicographic word list this equals
/// `sup |f(w) - f(v)| / d(w, v)` over distinct words: a pair first differing
/// at position `p+1` sits in one such block with exactly that divisor, and
/// every coarser block it shares has a larger divisor.
pub(crate) fn lipschitz_of(words: &[Word], values: &[f64], metric: &MetricParams) -> f64 {
    let Some(k) = words.first().map(Word::len) else {
        return 0.0;
    };
    let mut best: f64 = 0.0;
    for p in 0..k {
        let scale = metric.base.powi(p as i32);
        let mut start = 0;
        while start < words.len() {
            let prefix = words[start].prefix(p);
            let mut end = start;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            while end < words.len() && words[end].prefix(p) == prefix {
                lo = lo.min(values[end]);
                hi = hi.max(values[end]);
                end += 1;
            }
            best = best.max((hi - lo) / scale);
            start = end;
        }
    }
    best
}

/// `Lip(psi) = sup_{x != x'} |psi(x) - psi(x')| / d(x, x')`, attained on
/// cylinder representatives for a locally constant `psi`.
pub fn lipschitz_constant(psi: &CylinderFunction) -> f64 {
    lipschitz_of(&psi.words, &psi.table, psi.spec.metric())
}

/// A potential `A: X x Y -> R` depending on the first `depth_x` symbols of
/// `x` and the first `depth_y` symbols of `y`. Stored row-major, rows are
/// x-words.
#[derive(Clone, Debug, PartialEq)]
pub struct JointCylinderFunction {
    spec_x: ShiftSpec,
    spec_y: ShiftSpec,
    depth_x: usize,
    depth_y: usize,
    words_x: Vec<Word>,
    words_y: Vec<Word>,
    table: Vec<f64>,
}

impl JointCylinderFunction {
    pub fn from_fn(
        spec_x: &ShiftSpec,
        depth_x: usize,
        spec_y: &ShiftSpec,
        depth_y: usize,
        f: impl Fn(&[u8], &[u8]) -> f64,
    ) -> Result<Self> {
        let words_x = enumerate_words(spec_x, depth_x)?;
        let words_y = enumerate_words(spec_y, depth_y)?;
        spec_x.check_cap(
            "joint table",
            words_x.len().saturating_mul(words_y.len()),
        )?;
        let mut table = Vec::with_capacity(words_x.len() * words_y.len());
        for wx in &words_x {
            for wy in &words_y {
                let v = f(wx.symbols(), wy.symbols());
                if !v.is_finite() {
                    return Err(Error::InvalidTable(format!(
                        "entry for ({wx}, {wy}) is not finite"
                    )));
                }
                table.push(v);
            }
        }
        Ok(JointCylinderFunction {
            spec_x: spec_x.clone(),
            spec_y: spec_y.clone(),
            depth_x,
            depth_y,
            words_x,
            words_y,
            table,
        })
    }

    /// Builds from a row-major table (rows indexed by x-words).
    pub fn from_rows(
        spec_x: &ShiftSpec,
        depth_x: usize,
        spec_y: &ShiftSpec,
        depth_y: usize,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let nx = enumerate_words(spec_x, depth_x)?.len();
        let ny = enumerate_words(spec_y, depth_y)?.len();
        if rows.len() != nx || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidTable(format!(
                "expected a {nx} x {ny} table"
            )));
        }
        let words_x = enumerate_words(spec_x, depth_x)?;
        let words_y = enumerate_words(spec_y, depth_y)?;
        Self::from_fn(spec_x, depth_x, spec_y, depth_y, |wx, wy| {
            rows[position(&words_x, wx).unwrap()][position(&words_y, wy).unwrap()]
        })
    }

    /// Builds from explicit entries; every allowed pair must appear exactly once.
    pub fn from_entries(
        spec_x: &ShiftSpec,
        depth_x: usize,
        spec_y: &ShiftSpec,
        depth_y: usize,
        entries: impl IntoIterator<Item = (Word, Word, f64)>,
    ) -> Result<Self> {
        let words_x = enumerate_words(spec_x, depth_x)?;
        let words_y = enumerate_words(spec_y, depth_y)?;
        let ny = words_y.len();
        let mut table = vec![None; words_x.len() * ny];
        for (wx, wy, v) in entries {
            let i = position(&words_x, wx.symbols()).ok_or_else(|| {
                Error::InvalidTable(format!("`{wx}` is not an allowed x-word of length {depth_x}"))
            })?;
            let j = position(&words_y, wy.symbols()).ok_or_else(|| {
                Error::InvalidTable(format!("`{wy}` is not an allowed y-word of length {depth_y}"))
            })?;
            if table[i * ny + j].replace(v).is_some() {
                return Err(Error::InvalidTable(format!("duplicate entry for ({wx}, {wy})")));
            }
        }
        for (idx, v) in table.iter().enumerate() {
            if v.is_none() {
                return Err(Error::InvalidTable(format!(
                    "missing entry for ({}, {})",
                    words_x[idx / ny],
                    words_y[idx % ny]
                )));
            }
        }
        Self::from_fn(spec_x, depth_x, spec_y, depth_y, |wx, wy| {
            let i = position(&words_x, wx).unwrap();
            let j = position(&words_y, wy).unwrap();
            table[i * ny + j].unwrap()
        })
    }

    pub fn constant(
        spec_x: &ShiftSpec,
        depth_x: usize,
        spec_y: &ShiftSpec,
        depth_y: usize,
        c: f64,
    ) -> Result<Self> {
        Self::from_fn(spec_x, depth_x, spec_y, depth_y, |_, _| c)
    }

    pub fn spec_x(&self) -> &ShiftSpec {
        &self.spec_x
    }

    pub fn spec_y(&self) -> &ShiftSpec {
        &self.spec_y
    }

    pub fn depth_x(&self) -> usize {
        self.depth_x
    }

    pub fn depth_y(&self) -> usize {
        self.depth_y
    }

    pub fn words_x(&self) -> &[Word] {
        &self.words_x
    }

    pub fn words_y(&self) -> &[Word] {
        &self.words_y
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.table[ix * self.words_y.len() + iy]
    }

    pub fn value(&self, wx: &[u8], wy: &[u8]) -> Option<f64> {
        let i = position(&self.words_x, wx)?;
        let j = position(&self.words_y, wy)?;
        Some(self.get(i, j))
    }

    /// The y-potential `y -> A(x, y)` for the `ix`-th x-word.
    pub fn row(&self, ix: usize) -> CylinderFunction {
        let ny = self.words_y.len();
        CylinderFunction {
            spec: self.spec_y.clone(),
            depth: self.depth_y,
            words: self.words_y.clone(),
            table: self.table[ix * ny..(ix + 1) * ny].to_vec(),
        }
    }

    /// The x-potential `x -> A(x, y)` for the `iy`-th y-word.
    pub fn column(&self, iy: usize) -> CylinderFunction {
        CylinderFunction {
            spec: self.spec_x.clone(),
            depth: self.depth_x,
            words: self.words_x.clone(),
            table: (0..self.words_x.len()).map(|i| self.get(i, iy)).collect(),
        }
    }

    /// `A^T(y, x) = A(x, y)`.
    pub fn transpose(&self) -> Self {
        let (nx, ny) = (self.words_x.len(), self.words_y.len());
        let mut table = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                table.push(self.get(i, j));
            }
        }
        JointCylinderFunction {
            spec_x: self.spec_y.clone(),
            spec_y: self.spec_x.clone(),
            depth_x: self.depth_y,
            depth_y: self.depth_x,
            words_x: self.words_y.clone(),
            words_y: self.words_x.clone(),
            table,
        }
    }

    pub fn refine(&self, depth_x: usize, depth_y: usize) -> Result<Self> {
        if depth_x < self.depth_x || depth_y < self.depth_y {
            return Err(Error::DepthTooSmall {
                requested: depth_x.min(depth_y),
                minimum: self.depth_x.max(self.depth_y),
            });
        }
        let (kx, ky) = (self.depth_x, self.depth_y);
        Self::from_fn(&self.spec_x, depth_x, &self.spec_y, depth_y, |wx, wy| {
            self.value(&wx[..kx], &wy[..ky])
                .expect("prefixes of allowed words are allowed")
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        JointCylinderFunction {
            table: self.table.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Largest entrywise gap to `other`, `None` if the shapes differ.
    pub fn max_abs_diff(&self, other: &JointCylinderFunction) -> Option<f64> {
        if self.spec_x != other.spec_x
            || self.spec_y != other.spec_y
            || self.depth_x != other.depth_x
            || self.depth_y != other.depth_y
        {
            return None;
        }
        Some(
            self.table
                .iter()
                .zip(&other.table)
                .fold(0.0, |m, (a, b)| m.max((a - b).abs())),
        )
    }

    /// `max_x Lip(y -> A(x, y))`: the Lipschitz bound that controls
    /// `|psi_nu(x) - psi_nu'(x)|` through W1(nu, nu').
    pub fn y_slice_lipschitz(&self) -> f64 {
        (0..self.words_x.len())
            .map(|i| lipschitz_constant(&self.row(i)))
            .fold(0.0, f64::max)
    }

    pub fn x_slice_lipschitz(&self) -> f64 {
        self.transpose().y_slice_lipschitz()
    }
}

/// Smallest `C` with
/// `|A(x,y) - A(x',y) - A(x,y') + A(x',y')| <= C d(x,x') d(y,y')`.
///
/// For each x-pair the y-part is the Lipschitz constant of the row
/// difference, which is exact over y-pairs.
pub fn mixed_constant(a: &JointCylinderFunction) -> f64 {
    let nx = a.words_x.len();
    let ny = a.words_y.len();
    let mx = a.spec_x.metric();
    let my = a.spec_y.metric();
    let mut best: f64 = 0.0;
    let mut diff = vec![0.0; ny];
    for i in 0..nx {
        for j in (i + 1)..nx {
            let dx = mx.exact_distance(a.words_x[i].symbols(), a.words_x[j].symbols());
            for (k, slot) in diff.iter_mut().enumerate() {
                *slot = a.get(i, k) - a.get(j, k);
            }
            best = best.max(lipschitz_of(&a.words_y, &diff, my) / dx);
        }
    }
    best
}
