//! Nash equilibrium search and certification.
//!
//! A profile `(mu, nu)` is certified by its best-response deficits
//! `eps_i = (best value player i can reach against the opponent) - (payoff
//! of player i at the profile)`. Searches never assume convergence: every
//! report carries the deficits of the profile it returns.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ergodic::{br_ergodic, br_ergodic_at, build_stationary_polytope, cycle_measures, working_order, EdgeFrequencyVector};
use crate::game::{payoff, GameSpec, Mode, Player, StrategyProfile};
use crate::lp::{LinearProgram, Relation, Sense, VarKind};
use crate::measures::{
    induced_potential_x, induced_potential_x_distribution, induced_potential_y,
    induced_potential_y_distribution, integrate_product_distributions, marginal,
    wasserstein1_markov, MarkovMeasure, WordDistribution, DEFAULT_W1_WORD_CAP,
};
use crate::sample;
use crate::symbolic::{JointCylinderFunction, ShiftSpec};
use crate::thermo::{gibbs, gibbs_with, ThermoOptions};

/// Profiles whose marginals agree within this bound count as repeated.
pub const REPEAT_TOL: f64 = 1e-9;
/// Negative deficits above `-NEGATIVE_EPS_TOL` are rounding and reported as 0.
const NEGATIVE_EPS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Iteration,
    FictitiousPlay,
    Direct,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Iteration => "iteration",
            Method::FictitiousPlay => "fictitious-play",
            Method::Direct => "direct",
        }
    }
}

/// Default certification tolerance for a mode and method.
pub fn default_tolerance(mode: Mode, method: Method) -> f64 {
    match (mode, method) {
        (_, Method::FictitiousPlay) => 1e-2,
        (Mode::Thermodynamic, Method::Iteration) => 1e-6,
        _ => 1e-8,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub thermo: ThermoOptions,
}

impl SearchOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        SearchOptions {
            tol,
            max_iter,
            thermo: ThermoOptions::default(),
        }
    }
}

/// Best-response deficits of a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpsilonCertificate {
    pub eps1: f64,
    pub eps2: f64,
    pub payoff1: f64,
    pub payoff2: f64,
    pub best_response_value1: f64,
    pub best_response_value2: f64,
    /// Ergodic mode only: whether each best response has a degenerate face.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicity1: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicity2: Option<bool>,
}

impl EpsilonCertificate {
    pub fn epsilon(&self) -> f64 {
        self.eps1.max(self.eps2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub step: usize,
    /// Upper ends of the Wasserstein enclosures between consecutive
    /// strategies of each player.
    pub w1_mu: f64,
    pub w1_nu: f64,
    pub payoff1: f64,
    pub payoff2: f64,
    pub eps1: f64,
    pub eps2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicity1: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicity2: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NashReport {
    pub mode: Mode,
    pub method: Method,
    pub profile: StrategyProfile,
    pub eps1: f64,
    pub eps2: f64,
    pub payoff1: f64,
    pub payoff2: f64,
    /// Game value (zero-sum) or best common payoff (common payoff).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// True only when `max(eps1, eps2) <= tolerance`.
    pub converged: bool,
    pub cycle_detected: bool,
    pub tolerance: f64,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    /// Every profile attaining the reported value, when enumerated.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub maximizers: Vec<StrategyProfile>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl NashReport {
    pub fn epsilon(&self) -> f64 {
        self.eps1.max(self.eps2)
    }

    fn from_certificate(
        game: &GameSpec,
        method: Method,
        profile: StrategyProfile,
        cert: &EpsilonCertificate,
        tol: f64,
    ) -> Self {
        NashReport {
            mode: game.mode(),
            method,
            profile,
            eps1: cert.eps1,
            eps2: cert.eps2,
            payoff1: cert.payoff1,
            payoff2: cert.payoff2,
            value: None,
            converged: cert.epsilon() <= tol,
            cycle_detected: false,
            tolerance: tol,
            iterations: 0,
            trace: Vec::new(),
            maximizers: Vec::new(),
            notes: Vec::new(),
        }
    }
}

struct Response {
    measure: MarkovMeasure,
    value: f64,
    multiplicity: Option<bool>,
}

fn best_response(game: &GameSpec, player: Player, other: &MarkovMeasure, thermo: &ThermoOptions) -> Result<Response> {
    let psi = match player {
        Player::One => induced_potential_x(game.a1(), other)?,
        Player::Two => induced_potential_y(game.a2(), other)?,
    };
    match game.mode() {
        Mode::Ergodic => {
            let br = br_ergodic(&psi)?;
            Ok(Response {
                measure: br.optimizer,
                value: br.value,
                multiplicity: Some(br.multiplicity_flag),
            })
        }
        Mode::Thermodynamic => {
            let g = gibbs_with(&psi, thermo)?;
            Ok(Response {
                value: g.value(),
                measure: g.gibbs,
                multiplicity: None,
            })
        }
    }
}

fn deficit(best: f64, actual: f64) -> Result<f64> {
    let eps = best - actual;
    if eps >= 0.0 {
        Ok(eps)
    } else if eps >= -NEGATIVE_EPS_TOL * (1.0 + best.abs()) {
        Ok(0.0)
    } else {
        Err(Error::SelfCheck(format!(
            "payoff {actual} exceeds the best-response value {best}"
        )))
    }
}

fn certificate_from(game: &GameSpec, profile: &StrategyProfile, r1: &Response, r2: &Response) -> Result<EpsilonCertificate> {
    let payoff1 = payoff(game, profile, Player::One)?;
    let payoff2 = payoff(game, profile, Player::Two)?;
    Ok(EpsilonCertificate {
        eps1: deficit(r1.value, payoff1)?,
        eps2: deficit(r2.value, payoff2)?,
        payoff1,
        payoff2,
        best_response_value1: r1.value,
        best_response_value2: r2.value,
        multiplicity1: r1.multiplicity,
        multiplicity2: r2.multiplicity,
    })
}

/// Best-response deficits of `profile`.
pub fn verify_epsilon_nash(game: &GameSpec, profile: &StrategyProfile) -> Result<EpsilonCertificate> {
    verify_epsilon_nash_with(game, profile, &ThermoOptions::default())
}

pub fn verify_epsilon_nash_with(game: &GameSpec, profile: &StrategyProfile, thermo: &ThermoOptions) -> Result<EpsilonCertificate> {
    profile.check_against(game)?;
    let r1 = best_response(game, Player::One, &profile.nu, thermo)?;
    let r2 = best_response(game, Player::Two, &profile.mu, thermo)?;
    certificate_from(game, profile, &r1, &r2)
}

/// Upper end of a Wasserstein enclosure between two strategies, at the
/// deepest level the word cap allows (never below both orders).
pub fn step_size(a: &MarkovMeasure, b: &MarkovMeasure) -> Result<f64> {
    let d = a.spec().alphabet_size();
    let mut k = a.order().max(b.order()).max(1);
    while (d as u128).pow(k as u32 + 1) <= DEFAULT_W1_WORD_CAP as u128 && k < a.order().max(b.order()) + 2 {
        k += 1;
    }
    Ok(wasserstein1_markov(a, b, k)?.hi)
}

fn fingerprint(mu: &MarkovMeasure, depth: usize) -> Result<Vec<f64>> {
    Ok(marginal(mu, depth)?.weights().to_vec())
}

fn same_profile(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> bool {
    let close = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(x, y)| (x - y).abs() <= REPEAT_TOL);
    close(&a.0, &b.0) && close(&a.1, &b.1)
}

/// Simultaneous best-response iteration
/// `(mu, nu) <- (BR_1(nu), BR_2(mu))`.
///
/// Stops at the first profile whose next step moves both strategies by less
/// than `tol` (Wasserstein upper bound) and whose deficits are at most `tol`;
/// or when a profile repeats an earlier one (a cycle); or after `max_iter`
/// steps. In the ergodic mode the best response is the LP's vertex.
pub fn br_iteration(game: &GameSpec, init: &StrategyProfile, opts: &SearchOptions) -> Result<NashReport> {
    init.check_against(game)?;
    let depth_x = working_order(game.spec_x(), game.a1().depth_x()).max(init.mu.order()) + 1;
    let depth_y = working_order(game.spec_y(), game.a2().depth_y()).max(init.nu.order()) + 1;

    let mut profile = init.clone();
    let mut history = vec![(fingerprint(&profile.mu, depth_x)?, fingerprint(&profile.nu, depth_y)?)];
    let mut trace = Vec::new();
    let mut cycle_detected = false;
    let mut converged_at = None;

    for n in 0..=opts.max_iter {
        let r1 = best_response(game, Player::One, &profile.nu, &opts.thermo)?;
        let r2 = best_response(game, Player::Two, &profile.mu, &opts.thermo)?;
        let cert = certificate_from(game, &profile, &r1, &r2)?;
        let w1_mu = step_size(&profile.mu, &r1.measure)?;
        let w1_nu = step_size(&profile.nu, &r2.measure)?;
        trace.push(TraceEntry {
            step: n,
            w1_mu,
            w1_nu,
            payoff1: cert.payoff1,
            payoff2: cert.payoff2,
            eps1: cert.eps1,
            eps2: cert.eps2,
            multiplicity1: r1.multiplicity,
            multiplicity2: r2.multiplicity,
        });
        if w1_mu.max(w1_nu) < opts.tol && cert.epsilon() <= opts.tol {
            converged_at = Some(n);
            break;
        }
        if n == opts.max_iter {
            break;
        }
        let next = StrategyProfile::new(r1.measure, r2.measure);
        let key = (fingerprint(&next.mu, depth_x)?, fingerprint(&next.nu, depth_y)?);
        // the immediate predecessor is covered by the step-size test
        let repeated = history[..history.len() - 1].iter().any(|h| same_profile(h, &key));
        profile = next;
        history.push(key);
        if repeated {
            cycle_detected = true;
            break;
        }
    }

    let cert = verify_epsilon_nash_with(game, &profile, &opts.thermo)?;
    let iterations = history.len() - 1;
    let mut report = NashReport::from_certificate(game, Method::Iteration, profile, &cert, opts.tol);
    report.converged = converged_at.is_some() && cert.epsilon() <= opts.tol;
    report.cycle_detected = cycle_detected;
    report.iterations = iterations;
    report.trace = trace;
    if cycle_detected {
        report.notes.push("best responses revisit an earlier profile".into());
    }
    Ok(report)
}

/// Keeps a running average of edge frequencies at a fixed order together
/// with its word marginal at the depth the payoff tables need.
struct RunningAverage {
    mean: EdgeFrequencyVector,
    count: f64,
}

impl RunningAverage {
    fn new(mu: &MarkovMeasure, order: usize) -> Result<Self> {
        Ok(RunningAverage {
            mean: EdgeFrequencyVector::from_measure_at(mu, order)?,
            count: 1.0,
        })
    }

    fn push(&mut self, v: &EdgeFrequencyVector) -> Result<()> {
        let c = self.count;
        self.mean = EdgeFrequencyVector::mixture(&[(c / (c + 1.0), &self.mean), (1.0 / (c + 1.0), v)])?;
        self.count += 1.0;
        Ok(())
    }

    fn marginal(&self, depth: usize) -> Result<WordDistribution> {
        let full = WordDistribution::with_tolerance(self.mean.spec(), self.mean.order() + 1, self.mean.weights().to_vec(), 1e-9)?;
        full.prefix_marginal(depth)
    }
}

/// Fictitious play in the ergodic mode: each player best-responds to the
/// running average of the opponent's past strategies (averages of edge
/// frequencies stay in the stationary polytope). Stops once the averaged
/// profile is `tol`-certified. No convergence guarantee.
pub fn fictitious_play(game: &GameSpec, init: &StrategyProfile, opts: &SearchOptions) -> Result<NashReport> {
    if game.mode() != Mode::Ergodic {
        return Err(Error::GameStructure(
            "fictitious play is implemented for the ergodic mode".into(),
        ));
    }
    init.check_against(game)?;
    let (a1, a2) = (game.a1(), game.a2());
    let order_x = working_order(game.spec_x(), a1.depth_x().max(a2.depth_x())).max(init.mu.order());
    let order_y = working_order(game.spec_y(), a2.depth_y().max(a1.depth_y())).max(init.nu.order());
    let mut avg_mu = RunningAverage::new(&init.mu, order_x)?;
    let mut avg_nu = RunningAverage::new(&init.nu, order_y)?;
    let mut prev: Option<(MarkovMeasure, MarkovMeasure)> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for n in 0..=opts.max_iter {
        iterations = n;
        let py1 = avg_nu.marginal(a1.depth_y())?;
        let px2 = avg_mu.marginal(a2.depth_x())?;
        let br1 = br_ergodic_at(&induced_potential_x_distribution(a1, &py1)?, order_x)?;
        let br2 = br_ergodic_at(&induced_potential_y_distribution(a2, &px2)?, order_y)?;
        let payoff1 = integrate_product_distributions(a1, &avg_mu.marginal(a1.depth_x())?, &py1)?;
        let payoff2 = integrate_product_distributions(a2, &px2, &avg_nu.marginal(a2.depth_y())?)?;
        let eps1 = deficit(br1.value, payoff1)?;
        let eps2 = deficit(br2.value, payoff2)?;

        let current = (avg_mu.mean.to_measure()?, avg_nu.mean.to_measure()?);
        let (w1_mu, w1_nu) = match &prev {
            Some((m, v)) => (step_size(m, &current.0)?, step_size(v, &current.1)?),
            None => (0.0, 0.0),
        };
        trace.push(TraceEntry {
            step: n,
            w1_mu,
            w1_nu,
            payoff1,
            payoff2,
            eps1,
            eps2,
            multiplicity1: Some(br1.multiplicity_flag),
            multiplicity2: Some(br2.multiplicity_flag),
        });
        prev = Some(current);
        if eps1.max(eps2) <= opts.tol {
            converged = true;
            break;
        }
        if n == opts.max_iter {
            break;
        }
        avg_mu.push(&br1.edge_frequencies)?;
        avg_nu.push(&br2.edge_frequencies)?;
    }

    let (mu, nu) = prev.expect("at least one iteration");
    let profile = StrategyProfile::new(mu, nu);
    let cert = verify_epsilon_nash(game, &profile)?;
    let mut report = NashReport::from_certificate(game, Method::FictitiousPlay, profile, &cert, opts.tol);
    report.converged = converged && cert.epsilon() <= opts.tol;
    report.iterations = iterations;
    report.trace = trace;
    Ok(report)
}

/// The measure reported for an optimal edge-frequency vector when only its
/// depth-`depth` marginal matters: the canonical invariant completion of
/// that marginal, falling back to the vector's own chain when the shift
/// needs a deeper chain.
fn canonical_strategy(f: &EdgeFrequencyVector, depth: usize) -> Result<MarkovMeasure> {
    let spec = f.spec();
    let depth = depth.min(f.order() + 1);
    if spec.is_full_shift() || depth > spec.min_chain_order() {
        let q = WordDistribution::with_tolerance(spec, f.order() + 1, f.weights().to_vec(), 1e-9)?;
        MarkovMeasure::from_marginal(&q.prefix_marginal(depth)?)
    } else {
        f.to_measure()
    }
}

fn refined_tables(game: &GameSpec, order_x: usize, order_y: usize) -> Result<JointCylinderFunction> {
    game.a1().refine(order_x + 1, order_y + 1)
}

/// Exact solution of a zero-sum ergodic game (`A2 = -A1`) by linear
/// programming: player 1's maximin and player 2's minimax programs are solved
/// separately and must agree.
pub fn zero_sum_solve(game: &GameSpec, tol: f64) -> Result<NashReport> {
    if game.mode() != Mode::Ergodic {
        return Err(Error::GameStructure("zero-sum solver requires the ergodic mode".into()));
    }
    let defect = game.zero_sum_defect();
    if defect > 1e-12 {
        return Err(Error::GameStructure(format!(
            "A2 differs from -A1 by up to {defect:e}"
        )));
    }
    let order_x = working_order(game.spec_x(), game.a1().depth_x());
    let order_y = working_order(game.spec_y(), game.a1().depth_y());
    let a = refined_tables(game, order_x, order_y)?;
    let px = build_stationary_polytope(game.spec_x(), order_x)?;
    let py = build_stationary_polytope(game.spec_y(), order_y)?;
    let (ex, ey) = (px.edges().len(), py.edges().len());
    game.spec_x().check_cap("zero-sum program", ex.saturating_mul(ey))?;
    let entry = |i: usize, j: usize| a.get(i, j);

    // max t  s.t.  z_out(e) - z_in(e) + t <= sum_x A(x, e) f(x)  for every y-edge e
    let mut lp1 = LinearProgram::new(Sense::Maximize);
    let f0 = px.add_to(&mut lp1, &vec![0.0; ex]);
    let z0 = lp1.add_vars(VarKind::Free, &vec![0.0; py.nodes().len()]);
    let t = lp1.add_var(VarKind::Free, 1.0);
    for (e, &(from, to)) in py.endpoints().iter().enumerate() {
        let mut row: Vec<(usize, f64)> = (0..ex).map(|i| (f0 + i, -entry(i, e))).collect();
        if from != to {
            row.push((z0 + from, 1.0));
            row.push((z0 + to, -1.0));
        }
        row.push((t, 1.0));
        lp1.add_constraint(row, Relation::Le, 0.0);
    }
    let s1 = lp1.solve()?;

    // min s  s.t.  w_out(e) - w_in(e) + s >= sum_y A(e, y) g(y)  for every x-edge e
    let mut lp2 = LinearProgram::new(Sense::Minimize);
    let g0 = py.add_to(&mut lp2, &vec![0.0; ey]);
    let w0 = lp2.add_vars(VarKind::Free, &vec![0.0; px.nodes().len()]);
    let s = lp2.add_var(VarKind::Free, 1.0);
    for (e, &(from, to)) in px.endpoints().iter().enumerate() {
        let mut row: Vec<(usize, f64)> = (0..ey).map(|j| (g0 + j, -entry(e, j))).collect();
        if from != to {
            row.push((w0 + from, 1.0));
            row.push((w0 + to, -1.0));
        }
        row.push((s, 1.0));
        lp2.add_constraint(row, Relation::Ge, 0.0);
    }
    let s2 = lp2.solve()?;

    let (maximin, minimax) = (s1.objective, s2.objective);
    if (maximin - minimax).abs() > 1e-8 * (1.0 + maximin.abs()) {
        return Err(Error::SelfCheck(format!(
            "maximin {maximin} and minimax {minimax} disagree"
        )));
    }
    let f = EdgeFrequencyVector::new(game.spec_x(), order_x, s1.x[f0..f0 + ex].to_vec())?;
    let g = EdgeFrequencyVector::new(game.spec_y(), order_y, s2.x[g0..g0 + ey].to_vec())?;
    let mu = canonical_strategy(&f, game.a1().depth_x())?;
    let nu = canonical_strategy(&g, game.a1().depth_y())?;
    let profile = StrategyProfile::new(mu, nu);
    let cert = verify_epsilon_nash(game, &profile)?;
    let mut report = NashReport::from_certificate(game, Method::Direct, profile, &cert, tol);
    report.value = Some(0.5 * (maximin + minimax));
    report.notes.push(format!("maximin {maximin:.17e}, minimax {minimax:.17e}"));
    Ok(report)
}

/// Maximizes the common payoff `int int A dmu dnu` of a game with
/// `A1 = A2 = A`, by exhaustive search over pairs of stationary-polytope
/// vertices when both have at most 64, plus alternating best responses from
/// seeded starts. A global maximizer over product profiles is a Nash
/// equilibrium; the report certifies it.
pub fn common_payoff_maximize(game: &GameSpec, random_starts: usize, seed: u64, tol: f64) -> Result<NashReport> {
    if game.mode() != Mode::Ergodic {
        return Err(Error::GameStructure("common-payoff search requires the ergodic mode".into()));
    }
    let defect = game.common_payoff_defect();
    if defect > 1e-12 {
        return Err(Error::GameStructure(format!("A2 differs from A1 by up to {defect:e}")));
    }
    let a = game.a1();
    let order_x = working_order(game.spec_x(), a.depth_x());
    let order_y = working_order(game.spec_y(), a.depth_y());
    let mut notes = Vec::new();
    let mut candidates: Vec<(f64, MarkovMeasure, MarkovMeasure)> = Vec::new();

    match (vertex_list(game.spec_x(), order_x), vertex_list(game.spec_y(), order_y)) {
        (Ok(vx), Ok(vy)) => {
            let mx: Vec<WordDistribution> = vx.iter().map(|v| marginal(v, a.depth_x())).collect::<Result<_>>()?;
            let my: Vec<WordDistribution> = vy.iter().map(|v| marginal(v, a.depth_y())).collect::<Result<_>>()?;
            for (i, p) in mx.iter().enumerate() {
                for (j, q) in my.iter().enumerate() {
                    let v = integrate_product_distributions(a, p, q)?;
                    candidates.push((v, vx[i].clone(), vy[j].clone()));
                }
            }
        }
        (ex, ey) => {
            let reason = ex.err().or(ey.err()).map(|e| e.to_string()).unwrap_or_default();
            notes.push(format!("vertex enumeration skipped ({reason}); alternating search only"));
        }
    }

    let mut rng = sample::rng(seed);
    let mut starts = canonical_starts(game)?;
    for _ in 0..random_starts {
        starts.push(StrategyProfile::new(
            sample::random_measure(&mut rng, game.spec_x(), order_x)?,
            sample::random_measure(&mut rng, game.spec_y(), order_y)?,
        ));
    }
    for start in &starts {
        let (v, mu, nu) = alternating_maximization(game, &start.nu)?;
        candidates.push((v, mu, nu));
    }

    let best = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let mut maximizers: Vec<StrategyProfile> = Vec::new();
    for (v, mu, nu) in &candidates {
        if *v >= best - 1e-9 * (1.0 + best.abs()) {
            let p = StrategyProfile::new(mu.clone(), nu.clone());
            if !maximizers.iter().any(|q| same_measures(q, &p)) {
                maximizers.push(p);
            }
        }
    }
    let profile = maximizers[0].clone();
    let cert = verify_epsilon_nash(game, &profile)?;
    let mut report = NashReport::from_certificate(game, Method::Direct, profile, &cert, tol);
    report.value = Some(best);
    report.maximizers = maximizers;
    report.notes = notes;
    Ok(report)
}

fn same_measures(a: &StrategyProfile, b: &StrategyProfile) -> bool {
    let close = |u: &MarkovMeasure, v: &MarkovMeasure| {
        let k = u.order().max(v.order()) + 1;
        match (marginal(u, k), marginal(v, k)) {
            (Ok(p), Ok(q)) => p.l1_distance(&q).is_some_and(|d| d <= REPEAT_TOL),
            _ => false,
        }
    };
    close(&a.mu, &b.mu) && close(&a.nu, &b.nu)
}

fn vertex_list(spec: &ShiftSpec, order: usize) -> Result<Vec<MarkovMeasure>> {
    let vertices = cycle_measures(spec, order)?;
    if vertices.len() > 64 {
        return Err(Error::CapExceeded {
            what: "polytope vertices",
            count: vertices.len(),
            cap: 64,
        });
    }
    vertices.iter().map(EdgeFrequencyVector::to_measure).collect()
}

/// Alternating exact maximization of the common payoff from `nu`; each
/// accepted step strictly raises the payoff of the current pair.
fn alternating_maximization(game: &GameSpec, nu: &MarkovMeasure) -> Result<(f64, MarkovMeasure, MarkovMeasure)> {
    let a = game.a1();
    let mut mu = br_ergodic(&induced_potential_x(a, nu)?)?.optimizer;
    let first = br_ergodic(&induced_potential_y(a, &mu)?)?;
    let mut nu = first.optimizer;
    let mut value = first.value;
    for _ in 0..1000 {
        let br_mu = br_ergodic(&induced_potential_x(a, &nu)?)?;
        if br_mu.value <= value + 1e-12 {
            break;
        }
        mu = br_mu.optimizer;
        value = br_mu.value;
        let br_nu = br_ergodic(&induced_potential_y(a, &mu)?)?;
        if br_nu.value <= value + 1e-12 {
            break;
        }
        nu = br_nu.optimizer;
        value = br_nu.value;
    }
    Ok((value, mu, nu))
}

/// Starting profiles used by default: both players at the constant sequence
/// of the first symbol, then both at the last symbol. A player whose shift
/// forbids the constant sequence starts at the measure of maximal entropy.
pub fn canonical_starts(game: &GameSpec) -> Result<Vec<StrategyProfile>> {
    let pick = |spec: &ShiftSpec, symbol: u8| -> Result<MarkovMeasure> {
        match MarkovMeasure::dirac(spec, symbol) {
            Ok(m) => Ok(m),
            Err(_) => Ok(gibbs(&crate::symbolic::CylinderFunction::constant(spec, 1, 0.0)?)?.gibbs),
        }
    };
    let (sx, sy) = (game.spec_x(), game.spec_y());
    Ok(vec![
        StrategyProfile::new(pick(sx, 0)?, pick(sy, 0)?),
        StrategyProfile::new(
            pick(sx, (sx.alphabet_size() - 1) as u8)?,
            pick(sy, (sy.alphabet_size() - 1) as u8)?,
        ),
    ])
}

/// Runs `method` from the canonical starts followed by `random_starts`
/// seeded random starts. Reports come back in start order.
pub fn nash_search(
    game: &GameSpec,
    method: Method,
    opts: &SearchOptions,
    random_starts: usize,
    seed: u64,
) -> Result<Vec<NashReport>> {
    let mut starts = canonical_starts(game)?;
    let mut rng = sample::rng(seed);
    let order_x = working_order(game.spec_x(), game.a1().depth_x());
    let order_y = working_order(game.spec_y(), game.a2().depth_y());
    for _ in 0..random_starts {
        starts.push(StrategyProfile::new(
            sample::random_measure(&mut rng, game.spec_x(), order_x)?,
            sample::random_measure(&mut rng, game.spec_y(), order_y)?,
        ));
    }
    starts
        .iter()
        .map(|s| match method {
            Method::Iteration => br_iteration(game, s, opts),
            Method::FictitiousPlay => fictitious_play(game, s, opts),
            Method::Direct => Err(Error::GameStructure(
                "direct solvers are zero-sum or common-payoff specific".into(),
            )),
        })
        .collect()
}

/// Index of the preferred report: converged first, then smallest epsilon,
/// then earliest start.
pub fn best_report(reports: &[NashReport]) -> Option<usize> {
    (0..reports.len()).min_by(|&i, &j| {
        let (a, b) = (&reports[i], &reports[j]);
        b.converged
            .cmp(&a.converged)
            .then(a.epsilon().total_cmp(&b.epsilon()))
            .then(i.cmp(&j))
    })
}
