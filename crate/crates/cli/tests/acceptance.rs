//! Acceptance checks. Each criterion prints one PASS/FAIL line with its
//! runtime; the process exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ergame::equilibrium::{br_iteration, canonical_starts, verify_epsilon_nash, zero_sum_solve, SearchOptions};
use ergame::ergodic::{br_ergodic, max_mean_cycle_oracle};
use ergame::game::{GameSpec, Mode, StrategyProfile};
use ergame::io::{GameDoc, ProfileDoc};
use ergame::measures::{
    entropy, induced_potential_x, induced_potential_y, integrate, integrate_product, marginal, wasserstein1,
    MarkovMeasure,
};
use ergame::sample::{random_joint, random_measure, random_potential, rng};
use ergame::symbolic::{lipschitz_constant, mixed_constant, CylinderFunction, JointCylinderFunction, ShiftSpec};
use ergame::thermo::gibbs;
use ergame::transport::solve_cooperative;
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn full(d: usize) -> ShiftSpec {
    ShiftSpec::full(d).unwrap()
}

fn load_game(name: &str) -> GameSpec {
    let doc: GameDoc = serde_json::from_str(&std::fs::read_to_string(data(name)).unwrap()).unwrap();
    doc.into_game(None).unwrap()
}

fn load_profile(name: &str) -> StrategyProfile {
    let doc: ProfileDoc = serde_json::from_str(&std::fs::read_to_string(data(name)).unwrap()).unwrap();
    StrategyProfile::try_from(doc).unwrap()
}

/// Best Birkhoff average of `psi` over periodic points of period at most
/// `max_period` on a full shift, by listing every periodic word.
fn periodic_max_mean(psi: &CylinderFunction, max_period: usize) -> f64 {
    let d = psi.spec().alphabet_size();
    let k = psi.depth();
    let mut best = f64::NEG_INFINITY;
    for p in 1..=max_period {
        for code in 0..d.pow(p as u32) {
            let w: Vec<u8> = (0..p).map(|i| ((code / d.pow(i as u32)) % d) as u8).collect();
            let total: f64 = (0..p)
                .map(|i| {
                    let window: Vec<u8> = (0..k).map(|t| w[(i + t) % p]).collect();
                    psi.value(&window).unwrap()
                })
                .sum();
            best = best.max(total / p as f64);
        }
    }
    best
}

/// Maximizes `p a + (1-p) b + H(p)` by golden-section search.
fn bernoulli_oracle(a: f64, b: f64) -> f64 {
    let ent = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    let f = |p: f64| p * a + (1.0 - p) * b + ent(p) + ent(1.0 - p);
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
    f(0.5 * (lo + hi))
}

fn golden_equilibria() -> Outcome {
    let game = load_game("golden_game.json");
    ensure!(game.mode() == Mode::Ergodic, "shipped game is not ergodic");
    let a1 = game.a1();
    let a2 = game.a2();
    let table = |a: &JointCylinderFunction| [a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1)];
    ensure!(table(a1) == [2.0, 1.0, 1.0, 3.0], "A1 table {:?}", table(a1));
    ensure!(table(a2) == [3.0, 1.0, 1.0, 2.0], "A2 table {:?}", table(a2));
    let mut worst: f64 = 0.0;
    for file in ["dirac0_profile.json", "dirac1_profile.json"] {
        let cert = verify_epsilon_nash(&game, &load_profile(file)).map_err(|e| e.to_string())?;
        ensure!(cert.epsilon() <= 1e-9, "{file}: eps {}", cert.epsilon());
        ensure!(
            cert.multiplicity1 == Some(false) && cert.multiplicity2 == Some(false),
            "{file}: best response not unique"
        );
        worst = worst.max(cert.epsilon());
    }
    Ok(format!("max eps {worst:e}, both best responses unique"))
}

fn variational_principle() -> Outcome {
    let mut r = rng(2);
    let mut worst_residual: f64 = 0.0;
    let mut closest: f64 = f64::INFINITY;
    for i in 0..200 {
        let d = 2 + i % 2;
        let depth = 1 + (i / 2) % 2;
        let s = full(d);
        let psi = random_potential(&mut r, &s, depth, 1.0).unwrap();
        let g = gibbs(&psi).map_err(|e| e.to_string())?;
        let value = integrate(&psi, &g.gibbs).unwrap() + entropy(&g.gibbs);
        let residual = (value - g.lambda.ln()).abs();
        ensure!(residual <= 1e-8, "potential {i}: residual {residual:e}");
        worst_residual = worst_residual.max(residual);
        for _ in 0..1000 {
            let order = r.gen_range(1..=3);
            let mu = random_measure(&mut r, &s, order).unwrap();
            let challenger = integrate(&psi, &mu).unwrap() + entropy(&mu);
            ensure!(challenger <= value, "potential {i}: challenger {challenger} beats {value}");
            closest = closest.min(value - challenger);
        }
    }
    Ok(format!("max residual {worst_residual:e}, smallest margin over challengers {closest:e}"))
}

fn closed_form_gibbs() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let d = 2 + i % 3;
        let s = full(d);
        let psi = random_potential(&mut r, &s, 1, 3.0).unwrap();
        let z: f64 = psi.table().iter().map(|v| v.exp()).sum();
        let g = gibbs(&psi).map_err(|e| e.to_string())?;
        let err = (g.pressure - z.ln()).abs();
        ensure!(err <= 1e-10, "instance {i}: pressure off by {err:e}");
        worst = worst.max(err);
        let m = marginal(&g.gibbs, 2).unwrap();
        for (w, v) in m.iter() {
            let expected: f64 = w.symbols().iter().map(|&b| psi.table()[b as usize].exp() / z).product();
            ensure!((v - expected).abs() <= 1e-10, "instance {i}: word {w} has {v}, expected {expected}");
            worst = worst.max((v - expected).abs());
        }
        if d == 2 {
            let oracle = bernoulli_oracle(psi.table()[0], psi.table()[1]);
            ensure!((g.pressure - oracle).abs() <= 1e-10, "instance {i}: 1-D search gives {oracle}");
        }
    }
    Ok(format!("max deviation {worst:e}"))
}

fn ergodic_best_response_is_max_mean_cycle() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let depth = 1 + i % 2;
        let psi = random_potential(&mut r, &full(2), depth, 1.0).unwrap();
        let lp = br_ergodic(&psi).map_err(|e| e.to_string())?.value;
        let cycles = max_mean_cycle_oracle(&psi).map_err(|e| e.to_string())?;
        let periodic = periodic_max_mean(&psi, 2);
        let err = (lp - cycles).abs().max((lp - periodic).abs());
        ensure!(err <= 1e-8, "instance {i}: LP {lp}, cycles {cycles}, periodic {periodic}");
        worst = worst.max(err);
    }
    Ok(format!("max |LP - oracle| {worst:e}"))
}

fn wasserstein_certification() -> Outcome {
    let mut r = rng(5);
    let mut tightest: f64 = 0.0;
    for i in 0..200 {
        let d = 2 + i % 2;
        let s = full(d);
        let depth = r.gen_range(1..=2);
        let psi = random_potential(&mut r, &s, depth, 1.0).unwrap();
        let (oa, ob) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let mu = random_measure(&mut r, &s, oa).unwrap();
        let nu = random_measure(&mut r, &s, ob).unwrap();
        let k = if d == 2 { 6 } else { 4 };
        let w = wasserstein1(&mu, &nu, k).map_err(|e| e.to_string())?;
        ensure!(w.lo <= w.hi, "triple {i}: lo {} > hi {}", w.lo, w.hi);
        ensure!(w.hi - w.lo <= 0.5f64.powi(k as i32), "triple {i}: width {}", w.hi - w.lo);
        let gap = (integrate(&psi, &mu).unwrap() - integrate(&psi, &nu).unwrap()).abs();
        let bound = lipschitz_constant(&psi) * w.hi;
        ensure!(gap <= bound, "triple {i}: integral gap {gap} exceeds Lip * W1 = {bound}");
        if bound > 0.0 {
            tightest = tightest.max(gap / bound);
        }
    }
    let a = MarkovMeasure::dirac(&full(2), 0).unwrap();
    let b = MarkovMeasure::dirac(&full(2), 1).unwrap();
    for k in 1..=6 {
        let w = wasserstein1(&a, &b, k).map_err(|e| e.to_string())?;
        ensure!(w.lo == 1.0 && w.hi == 1.0, "Dirac pair at depth {k}: [{}, {}]", w.lo, w.hi);
    }
    Ok(format!("largest gap / (Lip * W1 hi) {tightest:.4}; fixed points exactly 1 apart"))
}

fn induced_potential_bound() -> Outcome {
    let mut r = rng(6);
    let mut best: f64 = 0.0;
    for i in 0..200 {
        let d = 2 + i % 2;
        let s = full(d);
        let (dx, dy) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let a = random_joint(&mut r, &s, dx, &s, dy, 1.0).unwrap();
        let (oa, ob) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let nu = random_measure(&mut r, &s, oa).unwrap();
        let nu2 = random_measure(&mut r, &s, ob).unwrap();
        let diff = induced_potential_x(&a, &nu).unwrap().sub(&induced_potential_x(&a, &nu2).unwrap()).unwrap();
        let w = wasserstein1(&nu, &nu2, if d == 2 { 6 } else { 4 }).map_err(|e| e.to_string())?;
        let ratio = diff.sup_norm() / w.hi;
        let bound = mixed_constant(&a) + a.y_slice_lipschitz();
        ensure!(ratio <= bound, "pair {i}: ratio {ratio} exceeds {bound}");
        best = best.max(ratio / bound);
    }
    Ok(format!("largest ratio / (C + Lip) {best:.4}"))
}

fn thermodynamic_search() -> Outcome {
    let mut r = rng(7);
    let s = full(2);
    let mut most = 0;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let a1 = random_joint(&mut r, &s, 1, &s, 1, 1.0).unwrap().map(|v| 0.1 * v);
        let a2 = random_joint(&mut r, &s, 1, &s, 1, 1.0).unwrap().map(|v| 0.1 * v);
        let game = GameSpec::new(a1, a2, Mode::Thermodynamic).unwrap();
        let init = canonical_starts(&game).unwrap().remove(0);
        let report = br_iteration(&game, &init, &SearchOptions::new(1e-6, 200)).map_err(|e| e.to_string())?;
        ensure!(report.converged, "game {i}: not converged after {} steps", report.iterations);
        let cert = verify_epsilon_nash(&game, &report.profile).map_err(|e| e.to_string())?;
        ensure!(cert.epsilon() <= 1e-6, "game {i}: eps {}", cert.epsilon());
        most = most.max(report.iterations);
        worst = worst.max(cert.epsilon());
    }
    Ok(format!("at most {most} iterations, max eps {worst:e}"))
}

fn zero_sum_exactness() -> Outcome {
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let depth = 1 + i % 2;
        let a = random_joint(&mut r, &full(2), depth, &full(2), depth, 1.0).unwrap();
        let game = GameSpec::new(a.clone(), a.map(|v| -v), Mode::Ergodic).unwrap();
        let report = zero_sum_solve(&game, 1e-8).map_err(|e| e.to_string())?;
        // maximin >= payoff - eps2 and minimax <= payoff + eps1
        let cert = verify_epsilon_nash(&game, &report.profile).map_err(|e| e.to_string())?;
        let gap = cert.eps1 + cert.eps2;
        ensure!(gap <= 1e-8, "game {i}: minimax - maximin up to {gap:e}");
        let value = report.value.unwrap();
        ensure!((value - cert.payoff1).abs() <= 1e-8, "game {i}: value {value} vs payoff {}", cert.payoff1);
        worst = worst.max(gap);
    }
    let pennies = load_game("matching_pennies.json");
    let report = zero_sum_solve(&pennies, 1e-8).map_err(|e| e.to_string())?;
    let value = report.value.unwrap();
    ensure!(value.abs() <= 1e-8, "matching pennies value {value}");
    for m in [&report.profile.mu, &report.profile.nu] {
        let p = marginal(m, 3).unwrap();
        ensure!(
            p.weights().iter().all(|w| (w - 0.125).abs() <= 1e-8),
            "matching pennies strategy is not uniform Bernoulli: {:?}",
            p.weights()
        );
    }
    Ok(format!("max duality gap {worst:e}; matching pennies value {value:e}"))
}

fn cooperative_dominance() -> Outcome {
    let mut r = rng(9);
    let mut smallest: f64 = f64::INFINITY;
    for i in 0..100 {
        let d = 2 + i % 2;
        let s = full(d);
        let (dx, dy) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let a2 = random_joint(&mut r, &s, dx, &s, dy, 1.0).unwrap();
        let mu = random_measure(&mut r, &s, 1).unwrap();
        let res = solve_cooperative(&a2, &mu, 2).map_err(|e| e.to_string())?;
        let product_best = periodic_max_mean(&induced_potential_y(&a2, &mu).unwrap(), d.pow(dy as u32 - 1).max(d));
        ensure!(res.value >= product_best - 1e-9, "instance {i}: plan {} below product {product_best}", res.value);
        for _ in 0..10 {
            let nu = random_measure(&mut r, &s, 2).unwrap();
            ensure!(res.value >= integrate_product(&a2, &mu, &nu).unwrap() - 1e-9, "instance {i}: product beats plan");
        }
        smallest = smallest.min(res.value - product_best);
    }
    let diag: JointCylinderFunction = serde_json::from_str(&std::fs::read_to_string(data("diagonal_indicator.json")).unwrap()).unwrap();
    let mu: MarkovMeasure = serde_json::from_str(&std::fs::read_to_string(data("uniform_bernoulli.json")).unwrap()).unwrap();
    let res = solve_cooperative(&diag, &mu, 1).map_err(|e| e.to_string())?;
    ensure!((res.value - 1.0).abs() <= 1e-9 && (res.benchmark - 0.5).abs() <= 1e-9, "diagonal: {} vs {}", res.value, res.benchmark);
    Ok(format!("smallest gain {smallest:e}; diagonal indicator {} vs {}", res.value, res.benchmark))
}

fn run_cli(args: &[&str], dir: &Path) -> (i32, Vec<u8>, Vec<u8>) {
    let out = dir.join("report.json");
    let trace = dir.join("trace.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_ergame"))
        .args(args)
        .arg("--out")
        .arg(&out)
        .arg("--trace-csv")
        .arg(&trace)
        .env_remove("ERGAME_WORD_CAP")
        .stderr(std::process::Stdio::null())
        .status()
        .expect("run ergame");
    let report = std::fs::read(&out).unwrap_or_default();
    let trace = std::fs::read(&trace).unwrap_or_default();
    (status.code().unwrap_or(-1), report, trace)
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let game = data("golden_game.json");
    let pennies = data("matching_pennies.json");
    let common = data("common_indicator.json");
    let (game, pennies, common) = (game.to_str().unwrap(), pennies.to_str().unwrap(), common.to_str().unwrap());
    let runs: Vec<Vec<&str>> = vec![
        vec!["nash", game, "--mode", "thermodynamic", "--random-starts", "3", "--seed", "17"],
        vec!["nash", pennies, "--method", "fictitious-play", "--max-iter", "2000"],
        vec!["zerosum", pennies],
        vec!["common", common, "--random-starts", "3", "--seed", "5"],
    ];
    for args in &runs {
        let first = run_cli(args, dir.path());
        let second = run_cli(args, dir.path());
        // fictitious play on matching pennies stops short of the tolerance
        // and exits 3; its report and trace must still be reproducible
        ensure!(first.0 == 0 || first.0 == 3, "`{}` exited with {}", args.join(" "), first.0);
        ensure!(!first.1.is_empty(), "`{}` wrote no report", args.join(" "));
        ensure!(first == second, "`{}` is not byte-identical across runs", args.join(" "));
    }
    Ok(format!("{} commands byte-identical across repeated runs", runs.len()))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { name: "golden game constant profiles are strict equilibria", limit: Some(Duration::from_secs(1)), check: golden_equilibria },
        Criterion { name: "variational principle for pressure", limit: Some(Duration::from_secs(30)), check: variational_principle },
        Criterion { name: "depth-1 Gibbs measures in closed form", limit: None, check: closed_form_gibbs },
        Criterion { name: "ergodic best response equals max mean cycle", limit: None, check: ergodic_best_response_is_max_mean_cycle },
        Criterion { name: "Wasserstein enclosures and Lipschitz duality", limit: None, check: wasserstein_certification },
        Criterion { name: "induced potentials move within (C + Lip) W1", limit: None, check: induced_potential_bound },
        Criterion { name: "thermodynamic best-response iteration", limit: Some(Duration::from_secs(60)), check: thermodynamic_search },
        Criterion { name: "zero-sum minimax equals maximin", limit: None, check: zero_sum_exactness },
        Criterion { name: "cooperative plans dominate product plans", limit: None, check: cooperative_dominance },
        Criterion { name: "CLI reports are deterministic", limit: None, check: cli_determinism },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status} {} ({elapsed:.2?}): {detail}", i + 1, c.name);
    }
    if failed > 0 {
        println!("{failed} of {} acceptance criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} acceptance criteria passed", criteria.len());
}
