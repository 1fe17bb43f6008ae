//! Seeded random potentials and measures, used for multi-start searches and
//! randomized checks.

use rand::Rng;

use crate::error::Result;
use crate::measures::MarkovMeasure;
use crate::symbolic::{enumerate_words, CylinderFunction, JointCylinderFunction, ShiftSpec};

pub use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weights from the flat Dirichlet law on `n` points.
pub fn dirichlet<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// A Markov measure of order `order` whose transition rows are independent
/// flat-Dirichlet draws over allowed successors.
pub fn random_measure<R: Rng>(rng: &mut R, spec: &ShiftSpec, order: usize) -> Result<MarkovMeasure> {
    let d = spec.alphabet_size();
    let words = enumerate_words(spec, order)?;
    let mut transitions = vec![0.0; words.len() * d];
    for (i, w) in words.iter().enumerate() {
        let allowed: Vec<usize> = (0..d).filter(|&b| spec.allowed(w.symbols(), b as u8)).collect();
        let p = dirichlet(rng, allowed.len());
        for (b, v) in allowed.into_iter().zip(p) {
            transitions[i * d + b] = v;
        }
    }
    MarkovMeasure::from_transitions(spec, order, transitions)
}

/// A Bernoulli measure with flat-Dirichlet symbol probabilities.
pub fn random_bernoulli<R: Rng>(rng: &mut R, spec: &ShiftSpec) -> Result<MarkovMeasure> {
    let p = dirichlet(rng, spec.alphabet_size());
    MarkovMeasure::bernoulli(spec, &p)
}

/// Entries uniform on `[-scale, scale]`.
pub fn random_potential<R: Rng>(rng: &mut R, spec: &ShiftSpec, depth: usize, scale: f64) -> Result<CylinderFunction> {
    let n = enumerate_words(spec, depth)?.len();
    let table = (0..n).map(|_| scale * rng.gen_range(-1.0..=1.0)).collect();
    CylinderFunction::from_table(spec, depth, table)
}

/// Entries uniform on `[-scale, scale]`.
pub fn random_joint<R: Rng>(
    rng: &mut R,
    spec_x: &ShiftSpec,
    depth_x: usize,
    spec_y: &ShiftSpec,
    depth_y: usize,
    scale: f64,
) -> Result<JointCylinderFunction> {
    let nx = enumerate_words(spec_x, depth_x)?.len();
    let ny = enumerate_words(spec_y, depth_y)?.len();
    let rows: Vec<Vec<f64>> = (0..nx)
        .map(|_| (0..ny).map(|_| scale * rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    JointCylinderFunction::from_rows(spec_x, depth_x, spec_y, depth_y, &rows)
}
