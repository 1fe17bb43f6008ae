//! Thermodynamic formalism for locally constant potentials: the Ruelle
//! transfer operator as a finite matrix, its Perron data, the normalized
//! potential, the Gibbs (equilibrium) measure and the pressure.
//!
//! Orientation: for a potential of depth `m + 1` the matrix acts on
//! functions of length-`m` words, `M[w', w] = exp(psi(w b))` whenever
//! `w' = w_2 .. w_m b`. The weight is read from the source word extended by
//! the new symbol. Then `(M h)(w') = sum over preimages w` is the transfer
//! operator, `h` (with `M h = lambda h`) is its eigenfunction and the left
//! eigenvector `l` (with `l^T M = lambda l^T`) carries the eigenmeasure. The
//! Gibbs chain moves forward with `P(w -> w') = M[w', w] l(w') / (lambda l(w))`
//! and has stationary law proportional to `l * h`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ergodic::working_order;
use crate::game::Player;
use crate::measures::{entropy, induced_potential_x, induced_potential_y, marginal, MarkovMeasure, MeasureTolerances};
use crate::symbolic::{enumerate_words, position, refine, CylinderFunction, JointCylinderFunction, ShiftSpec, Word};

/// Tolerances and limits for the thermodynamic solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermoOptions {
    /// Relative change of successive eigenvalue estimates at which power
    /// iteration stops.
    pub eigen_tol: f64,
    pub max_iter: usize,
    /// Largest accepted `|int psi dmu + h(mu) - log lambda|`.
    pub variational_tol: f64,
}

impl Default for ThermoOptions {
    fn default() -> Self {
        ThermoOptions {
            eigen_tol: 1e-13,
            max_iter: 100_000,
            variational_tol: 1e-8,
        }
    }
}

/// The transfer matrix of a potential refined to depth `order + 1`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    spec: ShiftSpec,
    order: usize,
    nodes: Vec<Word>,
    potential: CylinderFunction,
    /// Row-major, `matrix[to * n + from]`.
    matrix: Vec<f64>,
    /// `(from, to, edge index)` for every allowed edge.
    edges: Vec<(usize, usize, usize)>,
}

impl TransferMatrix {
    pub fn spec(&self) -> &ShiftSpec {
        &self.spec
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[Word] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// The potential at edge depth `order + 1`.
    pub fn potential(&self) -> &CylinderFunction {
        &self.potential
    }

    /// `M[to, from]`.
    pub fn get(&self, to: usize, from: usize) -> f64 {
        self.matrix[to * self.nodes.len() + from]
    }

    pub fn as_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.chunks(self.nodes.len()).map(<[f64]>::to_vec).collect()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(from, to, _) in &self.edges {
            out[to] += self.matrix[to * self.nodes.len() + from] * v[from];
        }
    }

    fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(from, to, _) in &self.edges {
            out[from] += self.matrix[to * self.nodes.len() + from] * v[to];
        }
    }
}

pub fn transfer_matrix(psi: &CylinderFunction) -> Result<TransferMatrix> {
    let m = working_order(psi.spec(), psi.depth());
    transfer_matrix_at(psi, m)
}

pub fn transfer_matrix_at(psi: &CylinderFunction, m: usize) -> Result<TransferMatrix> {
    let potential = refine(psi, m + 1)?;
    let spec = psi.spec().clone();
    let nodes = enumerate_words(&spec, m)?;
    let n = nodes.len();
    spec.check_cap("transfer matrix", n.saturating_mul(n))?;
    let mut matrix = vec![0.0; n * n];
    let mut edges = Vec::with_capacity(potential.words().len());
    for (e, (word, value)) in potential.iter().enumerate() {
        let from = position(&nodes, word.prefix(m)).unwrap();
        let to = position(&nodes, word.suffix(m)).unwrap();
        matrix[to * n + from] = value.exp();
        edges.push((from, to, e));
    }
    Ok(TransferMatrix {
        spec,
        order: m,
        nodes,
        potential,
        matrix,
        edges,
    })
}

/// Perron eigenvalue with positive right and left eigenvectors, each
/// normalized to sum 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerronData {
    pub lambda: f64,
    pub h_eig: Vec<f64>,
    pub l_eig: Vec<f64>,
    pub iterations: usize,
}

pub fn perron(m: &TransferMatrix) -> Result<PerronData> {
    perron_with(m, &ThermoOptions::default())
}

/// Power iteration on `M + alpha I` from the all-ones vector. The shift has
/// the same eigenvectors and makes the iteration aperiodic; it tracks half
/// the current eigenvalue estimate so that a Perron root much smaller than
/// the largest entry does not slow convergence down.
pub fn perron_with(m: &TransferMatrix, opts: &ThermoOptions) -> Result<PerronData> {
    let (h, it_h) = power_iterate(m, opts, |v, out| m.apply(v, out))?;
    let (l, it_l) = power_iterate(m, opts, |v, out| m.apply_transpose(v, out))?;
    let mut mh = vec![0.0; m.dim()];
    m.apply(&h, &mut mh);
    let lambda = mh.iter().sum::<f64>() / h.iter().sum::<f64>();
    Ok(PerronData {
        lambda,
        h_eig: h,
        l_eig: l,
        iterations: it_h.max(it_l),
    })
}

fn power_iterate(
    m: &TransferMatrix,
    opts: &ThermoOptions,
    apply: impl Fn(&[f64], &mut [f64]),
) -> Result<(Vec<f64>, usize)> {
    let n = m.dim();
    let mut alpha = m.matrix.iter().cloned().fold(0.0, f64::max);
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut rho_prev = f64::NAN;
    for it in 1..=opts.max_iter {
        apply(&x, &mut y);
        // x sums to one, so the sum of y estimates the eigenvalue
        let rho: f64 = y.iter().sum();
        let mut change: f64 = 0.0;
        for (xi, yi) in x.iter_mut().zip(&y) {
            let next = (yi + alpha * *xi) / (rho + alpha);
            change = change.max((next - *xi).abs() / next.max(f64::MIN_POSITIVE));
            *xi = next;
        }
        if (rho - rho_prev).abs() <= opts.eigen_tol * rho && change <= opts.eigen_tol {
            return Ok((x, it));
        }
        rho_prev = rho;
        alpha = 0.5 * rho;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
    })
}

/// The thermodynamic best response to a potential.
#[derive(Clone, Debug, Serialize)]
pub struct GibbsResult {
    pub lambda: f64,
    /// `log lambda`.
    pub pressure: f64,
    pub h_eig: Vec<f64>,
    pub l_eig: Vec<f64>,
    pub gibbs: MarkovMeasure,
    /// `psi + log h - log h o shift - log lambda` at edge depth.
    pub normalized_potential: CylinderFunction,
    /// `int psi d(gibbs)`.
    pub integral: f64,
    pub entropy: f64,
    /// `|integral + entropy - pressure|`.
    pub variational_residual: f64,
}

impl GibbsResult {
    /// `int psi dmu + h(mu)` at the Gibbs measure.
    pub fn value(&self) -> f64 {
        self.integral + self.entropy
    }
}

pub fn gibbs(psi: &CylinderFunction) -> Result<GibbsResult> {
    gibbs_with(psi, &ThermoOptions::default())
}

pub fn gibbs_with(psi: &CylinderFunction, opts: &ThermoOptions) -> Result<GibbsResult> {
    let tm = transfer_matrix(psi)?;
    let perron = perron_with(&tm, opts)?;
    let (lambda, h, l) = (perron.lambda, &perron.h_eig, &perron.l_eig);
    let n = tm.dim();
    let d = tm.spec.alphabet_size();
    let m = tm.order;

    let mut transitions = vec![0.0; n * d];
    let mut normalized = vec![0.0; tm.potential.words().len()];
    for &(from, to, e) in &tm.edges {
        let b = tm.potential.words()[e].symbols()[m] as usize;
        let weight = tm.get(to, from);
        transitions[from * d + b] = weight * l[to] / (lambda * l[from]);
        normalized[e] = tm.potential.table()[e] + h[from].ln() - h[to].ln() - lambda.ln();
    }
    for row in transitions.chunks_mut(d) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }
    let mut pi: Vec<f64> = h.iter().zip(l).map(|(a, b)| a * b).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= s);

    let gibbs = MarkovMeasure::new_with_tolerances(
        &tm.spec,
        m,
        pi,
        transitions,
        &MeasureTolerances::default(),
    )?;
    let normalized_potential = CylinderFunction::from_table(&tm.spec, m + 1, normalized)?;

    let edge_law = marginal(&gibbs, m + 1)?;
    let integral: f64 = tm.potential.table().iter().zip(edge_law.weights()).map(|(a, b)| a * b).sum();
    let h_markov = entropy(&gibbs);
    let h_normalized: f64 = -normalized_potential
        .table()
        .iter()
        .zip(edge_law.weights())
        .map(|(a, b)| a * b)
        .sum::<f64>();
    if (h_markov - h_normalized).abs() > 1e-8 {
        return Err(Error::SelfCheck(format!(
            "entropy {h_markov} disagrees with -int of the normalized potential {h_normalized}"
        )));
    }
    let pressure = lambda.ln();
    let variational_residual = (integral + h_markov - pressure).abs();
    if variational_residual > opts.variational_tol {
        return Err(Error::SelfCheck(format!(
            "variational residual {variational_residual:e} exceeds {:e}",
            opts.variational_tol
        )));
    }
    Ok(GibbsResult {
        lambda,
        pressure,
        h_eig: perron.h_eig,
        l_eig: perron.l_eig,
        gibbs,
        normalized_potential,
        integral,
        entropy: h_markov,
        variational_residual,
    })
}

/// Largest `|sum over preimages of exp(normalized potential) - 1|`.
pub fn normalization_defect(result: &GibbsResult) -> f64 {
    let psi = &result.normalized_potential;
    let m = psi.depth() - 1;
    let nodes = enumerate_words(psi.spec(), m).expect("nodes of an existing potential");
    let mut sums = vec![0.0; nodes.len()];
    for (w, v) in psi.iter() {
        sums[position(&nodes, w.suffix(m)).unwrap()] += v.exp();
    }
    sums.iter().fold(0.0, |acc, s| acc.max((s - 1.0).abs()))
}

/// The thermodynamic best response of `player` to the opponent's measure:
/// the Gibbs measure of the induced potential.
pub fn br_thermo(a: &JointCylinderFunction, other: &MarkovMeasure, player: Player) -> Result<GibbsResult> {
    br_thermo_with(a, other, player, &ThermoOptions::default())
}

pub fn br_thermo_with(
    a: &JointCylinderFunction,
    other: &MarkovMeasure,
    player: Player,
    opts: &ThermoOptions,
) -> Result<GibbsResult> {
    let psi = match player {
        Player::One => induced_potential_x(a, other)?,
        Player::Two => induced_potential_y(a, other)?,
    };
    gibbs_with(&psi, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec2() -> ShiftSpec {
        ShiftSpec::full(2).unwrap()
    }

    #[test]
    fn zero_potential() {
        let psi = CylinderFunction::constant(&spec2(), 2, 0.0).unwrap();
        let tm = transfer_matrix(&psi).unwrap();
        assert_eq!(tm.as_rows(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let g = gibbs(&psi).unwrap();
        assert!((g.lambda - 2.0).abs() < 1e-13);
        assert!((g.pressure - 2f64.ln()).abs() < 1e-13);
        for p in g.gibbs.transitions() {
            assert!((p - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn depth_one_columns() {
        let psi = CylinderFunction::from_table(&spec2(), 1, vec![0.3, -1.2]).unwrap();
        let tm = transfer_matrix(&psi).unwrap();
        for to in 0..2 {
            assert_eq!(tm.get(to, 0), 0.3f64.exp());
            assert_eq!(tm.get(to, 1), (-1.2f64).exp());
        }
        let g = gibbs(&psi).unwrap();
        let z = 0.3f64.exp() + (-1.2f64).exp();
        assert!((g.lambda - z).abs() < 1e-12 * z);
        assert!((g.gibbs.pi()[0] - 0.3f64.exp() / z).abs() < 1e-12, "{:?} {}", g.gibbs.pi(), 0.3f64.exp() / z);
        assert!(normalization_defect(&g) < 1e-12);
    }

    #[test]
    fn periodic_support_converges() {
        // exp weights vanish nowhere, but a strongly periodic-looking potential
        let psi = CylinderFunction::from_table(&spec2(), 2, vec![-30.0, 0.0, 0.0, -30.0]).unwrap();
        let g = gibbs(&psi).unwrap();
        assert!(g.variational_residual < 1e-8);
        assert!((g.lambda - 1.0).abs() < 1e-6);
    }

    #[test]
    fn golden_mean_pressure() {
        let spec = ShiftSpec::with_forbidden(2, 1, vec![Word::new(vec![1, 1])]).unwrap();
        let psi = CylinderFunction::constant(&spec, 2, 0.0).unwrap();
        let g = gibbs(&psi).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((g.lambda - phi).abs() < 1e-12);
    }
}
