//! Dense revised simplex for the small and medium linear programs in this
//! crate (stationary polytopes, Kantorovich couplings, minimax duals).
//!
//! Two phases with artificial variables. Pricing is Dantzig's rule until a
//! degenerate pivot happens, after which Bland's smallest-index rule is used
//! until the objective moves again; the ratio test always breaks ties by the
//! smallest basic index. Every pivot sequence is therefore deterministic and
//! cannot cycle.
//!
//! Solutions carry the constraint duals and the reduced costs of the
//! original variables, expressed in the caller's sense: for a maximisation at
//! optimum, `rc = c - A^T y <= 0` and `c^T x = b^T y`.

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("problem is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("problem is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    /// Optimality and feasibility tolerance.
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            tol: 1e-9,
            max_iter: None,
        }
    }
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    sense: Sense,
    kinds: Vec<VarKind>,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One dual value per constraint, in insertion order.
    pub duals: Vec<f64>,
    /// `c_j - sum_i y_i a_ij` for every original variable.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            kinds: Vec::new(),
            objective: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, kind: VarKind, cost: f64) -> usize {
        self.kinds.push(kind);
        self.objective.push(cost);
        self.kinds.len() - 1
    }

    /// Adds `costs.len()` variables of one kind, returning the first index.
    pub fn add_vars(&mut self, kind: VarKind, costs: &[f64]) -> usize {
        let first = self.kinds.len();
        for &c in costs {
            self.add_var(kind, c);
        }
        first
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.kinds.len()));
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(&LpOptions::default())
    }

    pub fn solve_with(&self, opts: &LpOptions) -> Result<LpSolution, LpError> {
        let std = StandardForm::build(self);
        let mut tableau = RevisedSimplex::new(&std, opts);
        tableau.phase_one()?;
        tableau.phase_two()?;
        Ok(std.recover(self, &tableau))
    }
}

/// `min c^T x, A x = b, x >= 0, b >= 0`.
struct StandardForm {
    m: usize,
    columns: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    b: Vec<f64>,
    /// Columns of each original variable: (positive part, negative part).
    var_cols: Vec<(usize, Option<usize>)>,
    /// Row sign flips applied to make `b >= 0`.
    row_sign: Vec<f64>,
    /// Slack column usable as the initial basic variable for a row.
    unit_slack: Vec<Option<usize>>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let row_sign: Vec<f64> = lp
            .rows
            .iter()
            .map(|r| if r.rhs < 0.0 { -1.0 } else { 1.0 })
            .collect();

        let mut var_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.kinds.len()];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                if v != 0.0 {
                    var_entries[j].push((i, v * row_sign[i]));
                }
            }
        }

        let mut columns = Vec::new();
        let mut cost = Vec::new();
        let mut var_cols = Vec::with_capacity(lp.kinds.len());
        for (j, entries) in var_entries.into_iter().enumerate() {
            let c = flip * lp.objective[j];
            let pos = columns.len();
            match lp.kinds[j] {
                VarKind::NonNegative => {
                    columns.push(entries);
                    cost.push(c);
                    var_cols.push((pos, None));
                }
                VarKind::Free => {
                    let neg: Vec<(usize, f64)> = entries.iter().map(|&(i, v)| (i, -v)).collect();
                    columns.push(entries);
                    cost.push(c);
                    columns.push(neg);
                    cost.push(-c);
                    var_cols.push((pos, Some(pos + 1)));
                }
            }
        }

        let mut unit_slack = vec![None; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let s = match row.relation {
                Relation::Le => 1.0,
                Relation::Ge => -1.0,
                Relation::Eq => continue,
            } * row_sign[i];
            if s > 0.0 {
                unit_slack[i] = Some(columns.len());
            }
            columns.push(vec![(i, s)]);
            cost.push(0.0);
        }

        let b = lp
            .rows
            .iter()
            .zip(&row_sign)
            .map(|(r, s)| r.rhs * s)
            .collect();

        StandardForm {
            m,
            columns,
            cost,
            b,
            var_cols,
            row_sign,
            unit_slack,
        }
    }

    fn recover(&self, lp: &LinearProgram, s: &RevisedSimplex) -> LpSolution {
        let mut col_value = vec![0.0; s.n_total];
        for (i, &col) in s.basis.iter().enumerate() {
            col_value[col] = s.xb[i].max(0.0);
        }
        let y = s.duals(&s.phase_two_cost);
        let rc = |col: usize| -> f64 { self.cost[col] - dot_column(&self.columns[col], &y) };
        let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };

        let mut x = Vec::with_capacity(lp.kinds.len());
        let mut reduced_costs = Vec::with_capacity(lp.kinds.len());
        for &(pos, neg) in &self.var_cols {
            let v = col_value[pos] - neg.map_or(0.0, |n| col_value[n]);
            x.push(v);
            reduced_costs.push(flip * rc(pos));
        }
        let duals = y
            .iter()
            .zip(&self.row_sign)
            .map(|(yi, si)| flip * yi * si)
            .collect();
        let objective = x.iter().zip(&lp.objective).map(|(a, c)| a * c).sum();
        LpSolution {
            x,
            objective,
            duals,
            reduced_costs,
            iterations: s.iterations,
        }
    }
}

fn dot_column(col: &[(usize, f64)], y: &[f64]) -> f64 {
    col.iter().map(|&(i, v)| y[i] * v).sum()
}

const PIVOT_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 64;

struct RevisedSimplex<'a> {
    std: &'a StandardForm,
    m: usize,
    n_total: usize,
    /// Artificial columns are `n_real..n_total`, one per row that needs one.
    n_real: usize,
    artificial_row: Vec<usize>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    tol: f64,
    max_iter: usize,
    iterations: usize,
    since_refactor: usize,
    phase_two_cost: Vec<f64>,
}

impl<'a> RevisedSimplex<'a> {
    fn new(std: &'a StandardForm, opts: &LpOptions) -> Self {
        let m = std.m;
        let n_real = std.columns.len();
        let mut basis = Vec::with_capacity(m);
        let mut artificial_row = Vec::new();
        for i in 0..m {
            match std.unit_slack[i] {
                Some(col) => basis.push(col),
                None => {
                    basis.push(n_real + artificial_row.len());
                    artificial_row.push(i);
                }
            }
        }
        let n_total = n_real + artificial_row.len();
        let mut is_basic = vec![false; n_total];
        for &c in &basis {
            is_basic[c] = true;
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut phase_two_cost = std.cost.clone();
        phase_two_cost.resize(n_total, 0.0);
        let max_iter = opts
            .max_iter
            .unwrap_or(1000 + 50 * (m + n_total));
        RevisedSimplex {
            std,
            m,
            n_total,
            n_real,
            artificial_row,
            basis,
            is_basic,
            binv,
            xb: std.b.clone(),
            tol: opts.tol,
            max_iter,
            iterations: 0,
            since_refactor: 0,
            phase_two_cost,
        }
    }

    fn column(&self, col: usize) -> std::borrow::Cow<'_, [(usize, f64)]> {
        if col < self.n_real {
            std::borrow::Cow::Borrowed(&self.std.columns[col])
        } else {
            std::borrow::Cow::Owned(vec![(self.artificial_row[col - self.n_real], 1.0)])
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &col) in self.basis.iter().enumerate() {
            let cb = cost[col];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yj, bij) in y.iter_mut().zip(row) {
                    *yj += cb * bij;
                }
            }
        }
        y
    }

    fn ftran(&self, col: usize) -> Vec<f64> {
        let m = self.m;
        let a = self.column(col);
        (0..m)
            .map(|i| a.iter().map(|&(r, v)| self.binv[i * m + r] * v).sum())
            .collect()
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let theta = self.xb[r] / piv;
        for (i, xi) in self.xb.iter_mut().enumerate() {
            if i != r {
                *xi -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;
        let row_r: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (v, rr) in row.iter_mut().zip(&row_r) {
                *v -= f * rr;
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);
        self.is_basic[self.basis[r]] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    /// Recomputes `B^-1` and `x_B` from scratch by Gauss-Jordan elimination.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (j, &col) in self.basis.iter().enumerate() {
            for &(i, v) in self.column(col).iter() {
                b[i * m + j] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &k| b[i * m + c].abs().total_cmp(&b[k * m + c].abs()))
                .unwrap();
            if b[p * m + c].abs() < 1e-13 {
                return Err(LpError::Numerical("singular basis during refactorization".into()));
            }
            if p != c {
                for k in 0..m {
                    b.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = b[c * m + c];
            for k in 0..m {
                b[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = b[i * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    b[i * m + k] -= f * b[c * m + k];
                    inv[i * m + k] -= f * inv[c * m + k];
                }
            }
        }
        self.binv = inv;
        let rhs = &self.std.b;
        self.xb = (0..m)
            .map(|i| (0..m).map(|k| self.binv[i * m + k] * rhs[k]).sum())
            .collect();
        self.since_refactor = 0;
        Ok(())
    }

    /// Runs primal simplex iterations on `cost` until optimal.
    fn optimize(&mut self, cost: &[f64], allow_artificial: bool) -> Result<(), LpError> {
        let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let opt_tol = self.tol * scale;
        let mut last_degenerate = false;
        loop {
            if self.iterations >= self.max_iter {
                return Err(LpError::IterationLimit(self.max_iter));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let limit = if allow_artificial { self.n_total } else { self.n_real };
            let mut entering: Option<(usize, f64)> = None;
            for q in 0..limit {
                if self.is_basic[q] {
                    continue;
                }
                let d = cost[q] - dot_column(&self.column(q), &y);
                if d < -opt_tol {
                    if last_degenerate {
                        entering = Some((q, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d < best) {
                        entering = Some((q, d));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(());
            };

            let alpha = self.ftran(q);
            let mut leave: Option<(usize, f64)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.xb[i].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - 1e-12 * (1.0 + best)
                            || (ratio <= best + 1e-12 * (1.0 + best) && self.basis[i] < self.basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((r, theta)) = leave else {
                return Err(LpError::Unbounded);
            };
            last_degenerate = theta <= 1e-12;
            self.pivot(r, q, &alpha);
        }
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        if self.artificial_row.is_empty() {
            return Ok(());
        }
        let mut cost = vec![0.0; self.n_total];
        for c in cost.iter_mut().skip(self.n_real) {
            *c = 1.0;
        }
        self.optimize(&cost, false)?;
        self.refactor()?;
        let residual: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&c, _)| c >= self.n_real)
            .map(|(_, &v)| v.max(0.0))
            .sum();
        let bscale = self.std.b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if residual > 1e-7 * bscale {
            return Err(LpError::Infeasible(residual));
        }
        self.drive_out_artificials();
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis where some real column
    /// can replace them. Rows where none can are linearly dependent on the
    /// others; their artificial stays basic at zero and never moves.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.n_real {
                continue;
            }
            self.xb[r] = 0.0;
            let row = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, f64)> = None;
            for q in 0..self.n_real {
                if self.is_basic[q] {
                    continue;
                }
                let v = dot_column(&self.std.columns[q], row);
                if v.abs() > 1e-9 && best.is_none_or(|(_, b)| v.abs() > b.abs() + 1e-12) {
                    best = Some((q, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran(q);
                self.pivot(r, q, &alpha);
            }
        }
    }

    fn phase_two(&mut self) -> Result<(), LpError> {
        let cost = self.phase_two_cost.clone();
        self.optimize(&cost, false)?;
        self.refactor()?;
        Ok(())
    }
}
