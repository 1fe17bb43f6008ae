//! Ergodic optimization: maximizing `int psi dmu` over shift-invariant
//! measures. For a potential of depth `m + 1` this is a linear program over
//! stationary edge frequencies of the order-`m` de Bruijn graph, whose
//! vertices are the uniform measures on simple cycles.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpSolution, Relation, Sense, VarKind};
use crate::measures::{marginal, MarkovMeasure};
use crate::symbolic::{enumerate_words, position, refine, CylinderFunction, ShiftSpec, Word};

/// Balance and normalization tolerance for edge frequency vectors.
pub const EDGE_TOL: f64 = 1e-10;
/// Reduced costs above `-RC_TOL` count as optimal-face edges.
const RC_TOL: f64 = 1e-9;
/// Off-support mass above this marks a second optimal vertex.
const FACE_TOL: f64 = 1e-7;
/// Graphs larger than this are not searched for simple cycles.
pub const CYCLE_NODE_CAP: usize = 64;
/// Bound on the number of simple cycles enumerated.
pub const CYCLE_COUNT_CAP: usize = 1 << 20;

/// Stationary weights on the edges `w -> w_2..w_m b` of the order-`m`
/// de Bruijn graph, indexed by the length-`(m+1)` words `w b`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFrequencyVector {
    spec: ShiftSpec,
    order: usize,
    edges: Vec<Word>,
    f: Vec<f64>,
}

impl EdgeFrequencyVector {
    pub fn new(spec: &ShiftSpec, order: usize, f: Vec<f64>) -> Result<Self> {
        let edges = enumerate_words(spec, order + 1)?;
        if f.len() != edges.len() {
            return Err(Error::InvalidMeasure {
                constraint: "table size",
                detail: format!("expected {} edge weights, got {}", edges.len(), f.len()),
            });
        }
        if let Some(i) = f.iter().position(|v| !(v.is_finite() && *v >= -EDGE_TOL)) {
            return Err(Error::InvalidMeasure {
                constraint: "f >= 0",
                detail: format!("f(`{}`) = {}", edges[i], f[i]),
            });
        }
        let f: Vec<f64> = f.into_iter().map(|v| v.max(0.0)).collect();
        let total: f64 = f.iter().sum();
        if (total - 1.0).abs() > EDGE_TOL {
            return Err(Error::InvalidMeasure {
                constraint: "sum(f) = 1",
                detail: format!("sum is {total}"),
            });
        }
        let v = EdgeFrequencyVector {
            spec: spec.clone(),
            order,
            edges,
            f,
        };
        let imbalance = v.max_imbalance();
        if imbalance > EDGE_TOL {
            return Err(Error::InvalidMeasure {
                constraint: "flow balance",
                detail: format!("largest in/out gap {imbalance:e}"),
            });
        }
        Ok(v)
    }

    /// Edge frequencies of `mu` at its own order.
    pub fn from_measure(mu: &MarkovMeasure) -> Result<Self> {
        Self::from_measure_at(mu, mu.order())
    }

    /// Edge frequencies of `mu` at order `order >= mu.order()`.
    pub fn from_measure_at(mu: &MarkovMeasure, order: usize) -> Result<Self> {
        if order < mu.order() {
            return Err(Error::DepthTooSmall {
                requested: order,
                minimum: mu.order(),
            });
        }
        let q = marginal(mu, order + 1)?;
        Ok(EdgeFrequencyVector {
            spec: mu.spec().clone(),
            order,
            edges: q.words().to_vec(),
            f: q.weights().to_vec(),
        })
    }

    /// Uniform weight on the edges of a closed walk given by its nodes.
    pub fn from_cycle(spec: &ShiftSpec, order: usize, nodes: &[Word]) -> Result<Self> {
        let edges = enumerate_words(spec, order + 1)?;
        let mut f = vec![0.0; edges.len()];
        let len = nodes.len();
        for i in 0..len {
            let (a, b) = (&nodes[i], &nodes[(i + 1) % len]);
            if a.symbols()[1..] != b.symbols()[..order - 1] {
                return Err(Error::InvalidWord {
                    word: b.to_string(),
                    reason: format!("does not follow `{a}` in the de Bruijn graph"),
                });
            }
            let mut e = a.symbols().to_vec();
            e.push(b.symbols()[order - 1]);
            let j = position(&edges, &e).ok_or_else(|| Error::InvalidWord {
                word: Word::new(e.clone()).to_string(),
                reason: "forbidden transition".into(),
            })?;
            f[j] += 1.0 / len as f64;
        }
        Self::new(spec, order, f)
    }

    /// Convex combination of vectors on the same graph.
    pub fn mixture(parts: &[(f64, &EdgeFrequencyVector)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidMeasure {
            constraint: "mixture",
            detail: "no components".into(),
        })?.1;
        let mut f = vec![0.0; first.f.len()];
        for (c, v) in parts {
            if v.spec != first.spec || v.order != first.order {
                return Err(Error::SpecMismatch("mixture components differ".into()));
            }
            for (a, b) in f.iter_mut().zip(&v.f) {
                *a += c * b;
            }
        }
        let total: f64 = f.iter().sum();
        f.iter_mut().for_each(|v| *v /= total);
        Self::new(&first.spec, first.order, f)
    }

    pub fn spec(&self) -> &ShiftSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn edges(&self) -> &[Word] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.f
    }

    /// Largest `|outflow(w) - inflow(w)|` over nodes.
    pub fn max_imbalance(&self) -> f64 {
        let nodes = enumerate_words(&self.spec, self.order).expect("nodes enumerated before");
        let mut net = vec![0.0; nodes.len()];
        for (e, f) in self.edges.iter().zip(&self.f) {
            net[position(&nodes, e.prefix(self.order)).unwrap()] += f;
            net[position(&nodes, e.suffix(self.order)).unwrap()] -= f;
        }
        net.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &EdgeFrequencyVector) -> f64 {
        if self.f.len() != other.f.len() {
            return f64::INFINITY;
        }
        self.f
            .iter()
            .zip(&other.f)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `sum_e f(e) psi(e)` for a potential of depth `order + 1`.
    pub fn integrate(&self, psi: &CylinderFunction) -> Result<f64> {
        if psi.spec() != &self.spec || psi.depth() != self.order + 1 {
            return Err(Error::SpecMismatch(
                "potential is not defined on these edges".into(),
            ));
        }
        Ok(psi.table().iter().zip(&self.f).map(|(a, b)| a * b).sum())
    }

    /// The Markov measure with these edge frequencies; rows of words without
    /// mass are uniform over allowed successors.
    pub fn to_measure(&self) -> Result<MarkovMeasure> {
        MarkovMeasure::from_edge_frequencies(&self.spec, self.order, &self.f)
    }
}

/// The flow-balance polytope of stationary edge frequencies at order `m`.
#[derive(Clone, Debug)]
pub struct StationaryPolytope {
    spec: ShiftSpec,
    order: usize,
    nodes: Vec<Word>,
    edges: Vec<Word>,
    /// `(out-node, in-node)` for each edge.
    endpoints: Vec<(usize, usize)>,
}

pub fn build_stationary_polytope(spec: &ShiftSpec, m: usize) -> Result<StationaryPolytope> {
    if m < spec.min_chain_order() {
        return Err(Error::DepthTooSmall {
            requested: m,
            minimum: spec.min_chain_order(),
        });
    }
    let nodes = enumerate_words(spec, m)?;
    let edges = enumerate_words(spec, m + 1)?;
    let endpoints = edges
        .iter()
        .map(|e| {
            (
                position(&nodes, e.prefix(m)).unwrap(),
                position(&nodes, e.suffix(m)).unwrap(),
            )
        })
        .collect();
    Ok(StationaryPolytope {
        spec: spec.clone(),
        order: m,
        nodes,
        edges,
        endpoints,
    })
}

impl StationaryPolytope {
    pub fn spec(&self) -> &ShiftSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[Word] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Word] {
        &self.edges
    }

    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    pub fn num_balance_rows(&self) -> usize {
        self.nodes.len()
    }

    /// Rows of the equality system `A f = b`: one balance row per node
    /// (outflow minus inflow, right-hand side 0) and a final normalization row.
    pub fn constraint_rows(&self) -> Vec<(Vec<(usize, f64)>, f64)> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.nodes.len()];
        for (e, &(from, to)) in self.endpoints.iter().enumerate() {
            if from != to {
                rows[from].push((e, 1.0));
                rows[to].push((e, -1.0));
            }
        }
        let mut out: Vec<(Vec<(usize, f64)>, f64)> = rows.into_iter().map(|r| (r, 0.0)).collect();
        out.push(((0..self.edges.len()).map(|e| (e, 1.0)).collect(), 1.0));
        out
    }

    pub fn is_feasible(&self, f: &[f64], tol: f64) -> bool {
        f.len() == self.edges.len()
            && f.iter().all(|v| *v >= -tol)
            && self.constraint_rows().iter().all(|(row, rhs)| {
                (row.iter().map(|&(j, a)| a * f[j]).sum::<f64>() - rhs).abs() <= tol
            })
    }

    /// Adds the polytope's variables (one per edge, costs `objective`) and
    /// constraints to `lp`, returning the index of the first edge variable.
    pub fn add_to(&self, lp: &mut LinearProgram, objective: &[f64]) -> usize {
        let base = lp.add_vars(VarKind::NonNegative, objective);
        for (row, rhs) in self.constraint_rows() {
            lp.add_constraint(row.into_iter().map(|(j, a)| (base + j, a)).collect(), Relation::Eq, rhs);
        }
        base
    }
}

/// Outcome of an ergodic best response.
#[derive(Clone, Debug)]
pub struct BestResponseResult {
    /// The selected optimal vertex as a Markov measure.
    pub optimizer: MarkovMeasure,
    pub edge_frequencies: EdgeFrequencyVector,
    /// `int psi d(optimizer)`.
    pub value: f64,
    /// True when a second optimal vertex exists, i.e. the optimal face is
    /// not a single point.
    pub multiplicity_flag: bool,
    /// Dual upper bound on the value of every invariant measure.
    pub certificate: f64,
}

/// The chain order at which a depth-`k` potential is optimized exactly.
pub fn working_order(spec: &ShiftSpec, depth: usize) -> usize {
    (depth.saturating_sub(1)).max(spec.min_chain_order()).max(1)
}

/// Maximizes `int psi dmu` over invariant measures.
pub fn br_ergodic(psi: &CylinderFunction) -> Result<BestResponseResult> {
    let m = working_order(psi.spec(), psi.depth());
    br_ergodic_at(psi, m)
}

/// As [`br_ergodic`] with the edge graph of an explicit order `m`.
pub fn br_ergodic_at(psi: &CylinderFunction, m: usize) -> Result<BestResponseResult> {
    let psi = refine(psi, m + 1)?;
    let poly = build_stationary_polytope(psi.spec(), m)?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    poly.add_to(&mut lp, psi.table());
    let sol = lp.solve()?;

    let edge_frequencies = EdgeFrequencyVector::new(psi.spec(), m, sol.x.clone())?;
    let value = edge_frequencies.integrate(&psi)?;
    let certificate = dual_bound(&poly, &psi, &sol);
    let multiplicity_flag = second_vertex_exists(&poly, &psi, &sol)?;
    let optimizer = edge_frequencies.to_measure()?;
    Ok(BestResponseResult {
        optimizer,
        edge_frequencies,
        value,
        multiplicity_flag,
        certificate,
    })
}

/// `z + max_e (psi(e) - (y_out(e) - y_in(e) + z))`: for every stationary `f`,
/// `sum f psi = z + sum f (psi - A^T y)`, which this bounds from above.
fn dual_bound(poly: &StationaryPolytope, psi: &CylinderFunction, sol: &LpSolution) -> f64 {
    let n = poly.nodes.len();
    let z = sol.duals[n];
    let worst = poly
        .endpoints
        .iter()
        .zip(psi.table())
        .map(|(&(a, b), &v)| {
            let lifted = if a != b { sol.duals[a] - sol.duals[b] } else { 0.0 } + z;
            v - lifted
        })
        .fold(f64::NEG_INFINITY, f64::max);
    z + worst
}

/// Searches the face cut out by near-zero reduced costs for stationary mass
/// off the support of the returned vertex.
fn second_vertex_exists(poly: &StationaryPolytope, psi: &CylinderFunction, sol: &LpSolution) -> Result<bool> {
    let scale = 1.0 + psi.sup_norm();
    let on_face: Vec<bool> = sol.reduced_costs[..poly.edges.len()]
        .iter()
        .map(|rc| *rc >= -RC_TOL * scale)
        .collect();
    let off_support: Vec<f64> = sol.x[..poly.edges.len()]
        .iter()
        .map(|&x| if x > 1e-12 { 0.0 } else { 1.0 })
        .collect();
    if !on_face.iter().zip(&off_support).any(|(f, o)| *f && *o > 0.0) {
        return Ok(false);
    }
    let mut lp = LinearProgram::new(Sense::Maximize);
    let base = poly.add_to(&mut lp, &off_support);
    for (e, &allowed) in on_face.iter().enumerate() {
        if !allowed {
            lp.add_constraint(vec![(base + e, 1.0)], Relation::Eq, 0.0);
        }
    }
    let extra = lp.solve()?;
    Ok(extra.objective > FACE_TOL)
}

/// All simple cycles of the order-`m` de Bruijn graph, each listed from its
/// smallest node index, in the order found by depth-first search.
pub fn simple_cycles(spec: &ShiftSpec, m: usize) -> Result<Vec<Vec<Word>>> {
    let poly = build_stationary_polytope(spec, m)?;
    let n = poly.nodes.len();
    if n > CYCLE_NODE_CAP {
        return Err(Error::CapExceeded {
            what: "cycle enumeration (nodes)",
            count: n,
            cap: CYCLE_NODE_CAP,
        });
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &poly.endpoints {
        adj[a].push(b);
    }
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        // iterative DFS over successors larger than `start`
        let mut stack: Vec<usize> = vec![0];
        while let Some(next_child) = stack.last_mut() {
            let u = *path.last().unwrap();
            if *next_child >= adj[u].len() {
                stack.pop();
                on_path[u] = false;
                path.pop();
                continue;
            }
            let v = adj[u][*next_child];
            *next_child += 1;
            if v == start {
                cycles.push(path.clone());
                if cycles.len() > CYCLE_COUNT_CAP {
                    return Err(Error::CapExceeded {
                        what: "cycle enumeration (cycles)",
                        count: cycles.len(),
                        cap: CYCLE_COUNT_CAP,
                    });
                }
            } else if v > start && !on_path[v] {
                on_path[v] = true;
                path.push(v);
                stack.push(0);
            }
        }
    }
    Ok(cycles
        .into_iter()
        .map(|c| c.into_iter().map(|i| poly.nodes[i].clone()).collect())
        .collect())
}

/// Mean of a depth-`(m+1)` potential along a closed walk of length-`m` nodes.
fn cycle_mean(psi: &CylinderFunction, cycle: &[Word]) -> f64 {
    let m = cycle[0].len();
    let len = cycle.len();
    let total: f64 = (0..len)
        .map(|i| {
            let mut e = cycle[i].symbols().to_vec();
            e.push(cycle[(i + 1) % len].symbols()[m - 1]);
            psi.value(&e).expect("cycle edges are allowed")
        })
        .sum();
    total / len as f64
}

/// Maximum over simple cycles of the de Bruijn graph of the mean of `psi`
/// along the cycle, by exhaustive enumeration.
pub fn max_mean_cycle_oracle(psi: &CylinderFunction) -> Result<f64> {
    let m = working_order(psi.spec(), psi.depth());
    let psi = refine(psi, m + 1)?;
    let cycles = simple_cycles(psi.spec(), m)?;
    Ok(cycles
        .iter()
        .map(|c| cycle_mean(&psi, c))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Karp's maximum mean cycle value on the de Bruijn graph.
pub fn karp_max_mean_cycle(psi: &CylinderFunction) -> Result<f64> {
    let m = working_order(psi.spec(), psi.depth());
    let psi = refine(psi, m + 1)?;
    let poly = build_stationary_polytope(psi.spec(), m)?;
    let n = poly.nodes.len();
    // best[k][v]: heaviest walk with exactly k edges ending at v (any start)
    let mut best = vec![vec![f64::NEG_INFINITY; n]; n + 1];
    best[0].iter_mut().for_each(|v| *v = 0.0);
    for k in 1..=n {
        for (e, &(a, b)) in poly.endpoints.iter().enumerate() {
            let cand = best[k - 1][a] + psi.table()[e];
            if cand > best[k][b] {
                best[k][b] = cand;
            }
        }
    }
    let mut value = f64::NEG_INFINITY;
    for v in 0..n {
        if best[n][v] == f64::NEG_INFINITY {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| best[k][v] > f64::NEG_INFINITY)
            .map(|k| (best[n][v] - best[k][v]) / (n - k) as f64)
            .fold(f64::INFINITY, f64::min);
        value = value.max(worst);
    }
    Ok(value)
}

/// Invariant measures carried by the simple cycles of the order-`m` graph:
/// the vertices of the stationary polytope.
pub fn cycle_measures(spec: &ShiftSpec, m: usize) -> Result<Vec<EdgeFrequencyVector>> {
    simple_cycles(spec, m)?
        .iter()
        .map(|c| EdgeFrequencyVector::from_cycle(spec, m, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec2() -> ShiftSpec {
        ShiftSpec::full(2).unwrap()
    }

    #[test]
    fn polytope_counts() {
        let p = build_stationary_polytope(&spec2(), 1).unwrap();
        assert_eq!(p.num_balance_rows(), 2);
        assert_eq!(p.constraint_rows().len(), 3);
        assert_eq!(p.edges().len(), 4);
        assert!(p.is_feasible(&[0.25; 4], 1e-12));
        assert!(p.is_feasible(&[1.0, 0.0, 0.0, 0.0], 1e-12));
        assert!(!p.is_feasible(&[0.0, 1.0, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn dominant_fixed_point() {
        let psi = CylinderFunction::from_table(&spec2(), 1, vec![1.0, 0.0]).unwrap();
        let br = br_ergodic(&psi).unwrap();
        assert!((br.value - 1.0).abs() < 1e-12);
        assert!(!br.multiplicity_flag);
        assert!(br.certificate >= br.value - 1e-9);
        assert_eq!(br.edge_frequencies.weights()[0], 1.0);
    }

    #[test]
    fn period_two_orbit() {
        let psi = CylinderFunction::from_table(&spec2(), 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let br = br_ergodic(&psi).unwrap();
        assert!((br.value - 1.0).abs() < 1e-12);
        let w = br.edge_frequencies.weights();
        assert!((w[1] - 0.5).abs() < 1e-12 && (w[2] - 0.5).abs() < 1e-12);
        assert!((max_mean_cycle_oracle(&psi).unwrap() - 1.0).abs() < 1e-15);
        assert!((karp_max_mean_cycle(&psi).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_potential_is_degenerate() {
        let psi = CylinderFunction::constant(&spec2(), 2, 0.7).unwrap();
        let br = br_ergodic(&psi).unwrap();
        assert!((br.value - 0.7).abs() < 1e-12);
        assert!(br.multiplicity_flag);
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(simple_cycles(&spec2(), 1).unwrap().len(), 3);
        assert_eq!(simple_cycles(&spec2(), 2).unwrap().len(), 6);
        assert_eq!(simple_cycles(&ShiftSpec::full(3).unwrap(), 1).unwrap().len(), 8);
    }

    #[test]
    fn golden_mean_optimization() {
        let spec = ShiftSpec::with_forbidden(2, 1, vec![Word::new(vec![1, 1])]).unwrap();
        let psi = CylinderFunction::from_table(&spec, 1, vec![0.0, 1.0]).unwrap();
        let br = br_ergodic(&psi).unwrap();
        assert!((br.value - 0.5).abs() < 1e-12);
        assert!((max_mean_cycle_oracle(&psi).unwrap() - 0.5).abs() < 1e-15);
    }
}
