//! Invariant measures as stationary Markov chains on words, their finite
//! marginals, entropy, payoff integrals and Wasserstein-1 distances.

mod markov;
mod wasserstein;

pub use markov::{entropy, marginal, MarkovMeasure, MeasureTolerances, WordDistribution};
pub(crate) use markov::fill_uniform_row;
pub use wasserstein::{
    wasserstein1, wasserstein1_distributions, wasserstein1_distributions_capped, wasserstein1_markov,
    wasserstein1_markov_capped, W1Interval,
    DEFAULT_W1_WORD_CAP,
};

use crate::error::{Error, Result};
use crate::symbolic::{CylinderFunction, JointCylinderFunction};

fn check_same_spec(
    what: &str,
    a: &crate::symbolic::ShiftSpec,
    b: &crate::symbolic::ShiftSpec,
) -> Result<()> {
    if a != b {
        return Err(Error::SpecMismatch(format!(
            "{what}: shift specifications differ"
        )));
    }
    Ok(())
}

/// `int psi dmu`, exact for a locally constant `psi`.
pub fn integrate(psi: &CylinderFunction, mu: &MarkovMeasure) -> Result<f64> {
    check_same_spec("integrate", psi.spec(), mu.spec())?;
    let p = marginal(mu, psi.depth())?;
    Ok(integrate_distribution(psi, &p))
}

/// `sum_w psi(w) p(w)` for a word distribution of the same depth.
pub fn integrate_distribution(psi: &CylinderFunction, p: &WordDistribution) -> f64 {
    debug_assert_eq!(psi.depth(), p.depth());
    psi.table().iter().zip(p.weights()).map(|(a, b)| a * b).sum()
}

/// `int int A(x, y) dmu(x) dnu(y)`.
pub fn integrate_product(
    a: &JointCylinderFunction,
    mu: &MarkovMeasure,
    nu: &MarkovMeasure,
) -> Result<f64> {
    check_same_spec("integrate_product (x)", a.spec_x(), mu.spec())?;
    check_same_spec("integrate_product (y)", a.spec_y(), nu.spec())?;
    let px = marginal(mu, a.depth_x())?;
    let py = marginal(nu, a.depth_y())?;
    integrate_product_distributions(a, &px, &py)
}

/// The same double sum against arbitrary word distributions of depths
/// `(depth_x, depth_y)`; no invariance is required.
pub fn integrate_product_distributions(
    a: &JointCylinderFunction,
    px: &WordDistribution,
    py: &WordDistribution,
) -> Result<f64> {
    check_same_spec("integrate_product (x)", a.spec_x(), px.spec())?;
    check_same_spec("integrate_product (y)", a.spec_y(), py.spec())?;
    if px.depth() != a.depth_x() || py.depth() != a.depth_y() {
        return Err(Error::SpecMismatch(format!(
            "distributions of depths ({}, {}) against a table of depths ({}, {})",
            px.depth(),
            py.depth(),
            a.depth_x(),
            a.depth_y()
        )));
    }
    let ny = py.weights().len();
    let mut total = 0.0;
    for (i, &p) in px.weights().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = &a.table()[i * ny..(i + 1) * ny];
        let inner: f64 = row.iter().zip(py.weights()).map(|(v, q)| v * q).sum();
        total += p * inner;
    }
    Ok(total)
}

/// `psi_nu(x) = int A1(x, y) dnu(y)`, a potential of depth `depth_x(A1)`.
pub fn induced_potential_x(a1: &JointCylinderFunction, nu: &MarkovMeasure) -> Result<CylinderFunction> {
    check_same_spec("induced_potential_x", a1.spec_y(), nu.spec())?;
    let py = marginal(nu, a1.depth_y())?;
    induced_potential_x_distribution(a1, &py)
}

pub fn induced_potential_x_distribution(
    a1: &JointCylinderFunction,
    py: &WordDistribution,
) -> Result<CylinderFunction> {
    check_same_spec("induced_potential_x", a1.spec_y(), py.spec())?;
    if py.depth() != a1.depth_y() {
        return Err(Error::SpecMismatch("y-distribution depth differs from the table".into()));
    }
    let ny = py.weights().len();
    let table = (0..a1.words_x().len())
        .map(|i| {
            a1.table()[i * ny..(i + 1) * ny]
                .iter()
                .zip(py.weights())
                .map(|(v, q)| v * q)
                .sum()
        })
        .collect();
    CylinderFunction::from_table(a1.spec_x(), a1.depth_x(), table)
}

/// `psi_mu(y) = int A2(x, y) dmu(x)`, a potential of depth `depth_y(A2)`.
pub fn induced_potential_y(a2: &JointCylinderFunction, mu: &MarkovMeasure) -> Result<CylinderFunction> {
    check_same_spec("induced_potential_y", a2.spec_x(), mu.spec())?;
    let px = marginal(mu, a2.depth_x())?;
    induced_potential_y_distribution(a2, &px)
}

pub fn induced_potential_y_distribution(
    a2: &JointCylinderFunction,
    px: &WordDistribution,
) -> Result<CylinderFunction> {
    check_same_spec("induced_potential_y", a2.spec_x(), px.spec())?;
    if px.depth() != a2.depth_x() {
        return Err(Error::SpecMismatch("x-distribution depth differs from the table".into()));
    }
    let ny = a2.words_y().len();
    let mut table = vec![0.0; ny];
    for (i, &p) in px.weights().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (t, v) in table.iter_mut().zip(&a2.table()[i * ny..(i + 1) * ny]) {
            *t += p * v;
        }
    }
    CylinderFunction::from_table(a2.spec_y(), a2.depth_y(), table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{ShiftSpec, Word};

    fn spec2() -> ShiftSpec {
        ShiftSpec::full(2).unwrap()
    }

    #[test]
    fn dirac_marginal_is_point_mass() {
        let mu = MarkovMeasure::dirac(&spec2(), 0).unwrap();
        let p = marginal(&mu, 3).unwrap();
        assert_eq!(p.weight(&[0, 0, 0]), Some(1.0));
        assert_eq!(p.weights().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn uniform_bernoulli_marginal() {
        let mu = MarkovMeasure::uniform_bernoulli(&spec2()).unwrap();
        let p = marginal(&mu, 2).unwrap();
        assert_eq!(p.weights(), &[0.25; 4]);
    }

    #[test]
    fn marginals_are_prefix_consistent() {
        let mu = MarkovMeasure::from_transitions(&spec2(), 1, vec![0.9, 0.1, 0.5, 0.5]).unwrap();
        for k in 2..6 {
            let a = marginal(&mu, k).unwrap().prefix_marginal(k - 1).unwrap();
            let b = marginal(&mu, k - 1).unwrap();
            assert!(a.l1_distance(&b).unwrap() < 1e-14);
        }
    }

    #[test]
    fn entropy_examples() {
        let u = MarkovMeasure::uniform_bernoulli(&spec2()).unwrap();
        assert!((entropy(&u) - 2f64.ln()).abs() < 1e-15);
        let dirac = MarkovMeasure::dirac(&spec2(), 0).unwrap();
        assert_eq!(entropy(&dirac), 0.0);
    }

    #[test]
    fn stationary_law_of_two_state_chain() {
        // pi = (5/6, 1/6) solves pi P = pi for P = [[0.9, 0.1], [0.5, 0.5]]
        let mu = MarkovMeasure::from_transitions(&spec2(), 1, vec![0.9, 0.1, 0.5, 0.5]).unwrap();
        assert!((mu.pi()[0] - 5.0 / 6.0).abs() < 1e-14);
        assert!((mu.pi()[1] - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn validation_names_the_constraint() {
        let err = MarkovMeasure::new(&spec2(), 1, vec![0.5, 0.5], vec![0.9, 0.1, 0.5, 0.5]).unwrap_err();
        match err {
            Error::InvalidMeasure { constraint, .. } => assert!(constraint.contains("stationarity")),
            other => panic!("unexpected {other:?}"),
        }
        let err = MarkovMeasure::new(&spec2(), 1, vec![0.5, 0.5], vec![0.9, 0.2, 0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::InvalidMeasure { constraint: "rows of P sum to 1", .. }));
    }

    #[test]
    fn periodic_orbit_measure() {
        let mu = MarkovMeasure::periodic(&spec2(), &Word::new(vec![0, 1])).unwrap();
        let p = marginal(&mu, 2).unwrap();
        assert_eq!(p.weights(), &[0.0, 0.5, 0.5, 0.0]);
        assert_eq!(entropy(&mu), 0.0);
    }

    #[test]
    fn lift_preserves_marginals() {
        let mu = MarkovMeasure::from_transitions(&spec2(), 1, vec![0.7, 0.3, 0.2, 0.8]).unwrap();
        let lifted = mu.lift(3).unwrap();
        let a = marginal(&mu, 5).unwrap();
        let b = marginal(&lifted, 5).unwrap();
        assert!(a.l1_distance(&b).unwrap() < 1e-14);
        assert!((entropy(&mu) - entropy(&lifted)).abs() < 1e-14);
    }

    #[test]
    fn canonical_completion_reproduces_marginal() {
        let mu = MarkovMeasure::from_transitions(&spec2(), 2, vec![0.7, 0.3, 0.2, 0.8, 0.5, 0.5, 0.1, 0.9]).unwrap();
        let q = marginal(&mu, 3).unwrap();
        let back = MarkovMeasure::from_marginal(&q).unwrap();
        assert!(marginal(&back, 3).unwrap().l1_distance(&q).unwrap() < 1e-14);
    }

    #[test]
    fn golden_mean_chain() {
        let spec = ShiftSpec::with_forbidden(2, 1, vec![Word::new(vec![1, 1])]).unwrap();
        let mu = MarkovMeasure::from_transitions(&spec, 1, vec![0.5, 0.5, 1.0, 0.0]).unwrap();
        assert!((mu.pi()[0] - 2.0 / 3.0).abs() < 1e-14);
        let p = marginal(&mu, 3).unwrap();
        assert_eq!(p.words().len(), 5);
        assert!(MarkovMeasure::new(&spec, 1, vec![0.5, 0.5], vec![0.5, 0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn integrate_product_examples() {
        let s = spec2();
        let a = JointCylinderFunction::from_rows(&s, 1, &s, 1, &[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let d0 = MarkovMeasure::dirac(&s, 0).unwrap();
        assert_eq!(integrate_product(&a, &d0, &d0).unwrap(), 2.0);
        let c = JointCylinderFunction::constant(&s, 2, &s, 3, 1.5).unwrap();
        let mu = MarkovMeasure::bernoulli(&s, &[0.3, 0.7]).unwrap();
        assert!((integrate_product(&c, &mu, &d0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn induced_potential_against_bernoulli() {
        let s = spec2();
        let a = JointCylinderFunction::from_rows(&s, 1, &s, 1, &[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let nu = MarkovMeasure::bernoulli(&s, &[0.25, 0.75]).unwrap();
        let psi = induced_potential_x(&a, &nu).unwrap();
        assert!((psi.table()[0] - (0.25 * 2.0 + 0.75 * 1.0)).abs() < 1e-15);
        assert!((psi.table()[1] - (0.25 * 1.0 + 0.75 * 3.0)).abs() < 1e-15);
        let d1 = MarkovMeasure::dirac(&s, 1).unwrap();
        let psi = induced_potential_y(&a, &d1).unwrap();
        assert_eq!(psi.table(), &[1.0, 3.0]);
    }
}
