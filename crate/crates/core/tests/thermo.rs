mod common;

use common::full;
use ergame::ergodic::br_ergodic;
use ergame::measures::{entropy, integrate, marginal, MarkovMeasure};
use ergame::sample::{random_measure, random_potential, rng};
use ergame::symbolic::{CylinderFunction, ShiftSpec, Word};
use ergame::thermo::{gibbs, normalization_defect, transfer_matrix};
use proptest::prelude::*;
use rand::Rng;

fn functional(psi: &CylinderFunction, mu: &MarkovMeasure) -> f64 {
    integrate(psi, mu).unwrap() + entropy(mu)
}

/// Maximizes `p a + (1-p) b - p log p - (1-p) log (1-p)` over `p` by golden
/// section search; the function is strictly concave.
fn bernoulli_oracle(a: f64, b: f64) -> (f64, f64) {
    let f = |p: f64| {
        let ent = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
        p * a + (1.0 - p) * b + ent(p) + ent(1.0 - p)
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let p = 0.5 * (lo + hi);
    (p, f(p))
}

#[test]
fn depth_one_gibbs_matches_the_one_dimensional_maximization() {
    let mut r = rng(31);
    let s = full(2);
    for _ in 0..100 {
        let psi = random_potential(&mut r, &s, 1, 3.0).unwrap();
        let (a, b) = (psi.table()[0], psi.table()[1]);
        let (p, value) = bernoulli_oracle(a, b);
        let g = gibbs(&psi).unwrap();
        assert!((g.pressure - value).abs() < 1e-10, "pressure {} vs {value}", g.pressure);
        let m = marginal(&g.gibbs, 1).unwrap();
        assert!((m.weights()[0] - p).abs() < 1e-7, "weight {} vs {p}", m.weights()[0]);
    }
}

#[test]
fn depth_one_gibbs_is_bernoulli() {
    let mut r = rng(37);
    for d in [2, 3, 4] {
        let s = full(d);
        let psi = random_potential(&mut r, &s, 1, 2.0).unwrap();
        let z: f64 = psi.table().iter().map(|v| v.exp()).sum();
        let g = gibbs(&psi).unwrap();
        assert!((g.pressure - z.ln()).abs() < 1e-10);
        let m = marginal(&g.gibbs, 2).unwrap();
        for (w, v) in m.iter() {
            let expected: f64 = w.symbols().iter().map(|&b| psi.table()[b as usize].exp() / z).product();
            assert!((v - expected).abs() < 1e-10);
        }
    }
}

#[test]
fn gibbs_beats_random_challengers() {
    let mut r = rng(41);
    for _ in 0..20 {
        let d = r.gen_range(2..=3);
        let depth = r.gen_range(1..=2);
        let s = full(d);
        let psi = random_potential(&mut r, &s, depth, 1.0).unwrap();
        let g = gibbs(&psi).unwrap();
        assert!(g.variational_residual <= 1e-8);
        assert!(normalization_defect(&g) < 1e-10);
        let best = functional(&psi, &g.gibbs);
        assert!((best - g.pressure).abs() <= 1e-8);
        for _ in 0..200 {
            let order = r.gen_range(1..=3);
            let challenger = random_measure(&mut r, &s, order).unwrap();
            assert!(functional(&psi, &challenger) <= best + 1e-10);
        }
    }
}

#[test]
fn pressure_shifts_with_constants_and_ignores_coboundaries() {
    let mut r = rng(43);
    let s = full(2);
    for _ in 0..20 {
        let psi = random_potential(&mut r, &s, 2, 1.0).unwrap();
        let g = gibbs(&psi).unwrap();
        let c = r.gen_range(-2.0..2.0);
        let shifted = gibbs(&psi.add_constant(c)).unwrap();
        assert!((shifted.pressure - g.pressure - c).abs() < 1e-12);
        assert!(marginal(&shifted.gibbs, 3).unwrap().l1_distance(&marginal(&g.gibbs, 3).unwrap()).unwrap() < 1e-10);

        // psi + u - u o shift has the same equilibrium state
        let u: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();
        let cob = CylinderFunction::from_fn(&s, 2, |w| psi.value(w).unwrap() + u[w[0] as usize] - u[w[1] as usize]).unwrap();
        let gc = gibbs(&cob).unwrap();
        assert!((gc.pressure - g.pressure).abs() < 1e-12);
        assert!(marginal(&gc.gibbs, 3).unwrap().l1_distance(&marginal(&g.gibbs, 3).unwrap()).unwrap() < 1e-10);
    }
}

#[test]
fn zero_potential_gives_the_measure_of_maximal_entropy() {
    let sft = ShiftSpec::with_forbidden(2, 1, vec![Word::new(vec![1, 1])]).unwrap();
    let g = gibbs(&CylinderFunction::constant(&sft, 2, 0.0).unwrap()).unwrap();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((g.pressure - golden.ln()).abs() < 1e-12);
    assert!((g.entropy - golden.ln()).abs() < 1e-10);
}

#[test]
fn transfer_matrix_orientation() {
    let s = full(2);
    let psi = CylinderFunction::from_table(&s, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let m = transfer_matrix(&psi).unwrap();
    // entry (to, from) carries exp(psi(from to))
    assert!((m.get(1, 0) - 1f64.exp()).abs() < 1e-15);
    assert!((m.get(0, 1) - 2f64.exp()).abs() < 1e-15);
}

#[test]
fn low_temperature_pressure_approaches_the_ergodic_maximum() {
    let mut r = rng(47);
    let s = full(2);
    for _ in 0..10 {
        let psi = random_potential(&mut r, &s, 2, 1.0).unwrap();
        let top = br_ergodic(&psi).unwrap().value;
        for beta in [1.0, 10.0, 50.0] {
            let p = gibbs(&psi.scale(beta)).unwrap().pressure / beta;
            assert!(p >= top - 1e-10);
            assert!(p <= top + 2f64.ln() / beta + 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn gibbs_self_checks_hold(seed in 0u64..500, d in 2usize..4, depth in 1usize..3) {
        let mut r = rng(seed);
        let psi = random_potential(&mut r, &full(d), depth, 2.0).unwrap();
        let g = gibbs(&psi).unwrap();
        prop_assert!(g.variational_residual <= 1e-8);
        prop_assert!(g.gibbs.stationarity_residual() < 1e-10);
        prop_assert!(g.entropy >= 0.0 && g.entropy <= (d as f64).ln() + 1e-12);
    }
}
