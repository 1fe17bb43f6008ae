use std::path::Path;

use ergame::equilibrium::{
    best_report, common_payoff_maximize, default_tolerance, nash_search, verify_epsilon_nash, zero_sum_solve, Method,
    NashReport, SearchOptions, TraceEntry,
};
use ergame::ergodic::br_ergodic;
use ergame::game::{payoff, GameSpec, Mode, Player, StrategyProfile};
use ergame::io::{GameDoc, JointPotentialDoc, MeasureDoc, PotentialDoc, ProfileDoc};
use ergame::measures::{
    entropy, induced_potential_x, induced_potential_y, integrate_product, marginal, wasserstein1_distributions_capped,
    wasserstein1_markov_capped, MarkovMeasure,
};
use ergame::symbolic::{CylinderFunction, JointCylinderFunction};
use ergame::thermo::gibbs;
use ergame::transport::{minimum_depth, solve_cooperative_with, solve_player1, TransportOptions};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::format::g17;
use crate::{CliError, Cli, Command, MethodArg, RunConfig};

const ITERATION_MAX_ITER: usize = 1000;
const FICTITIOUS_PLAY_MAX_ITER: usize = 10_000;
/// Largest default Wasserstein depth.
const MAX_DEFAULT_W1_DEPTH: usize = 8;

pub struct TraceRow {
    pub run: usize,
    pub entry: TraceEntry,
}

pub struct Outcome {
    pub result: Value,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub failure: Option<String>,
}

impl Outcome {
    fn done(result: Value) -> Self {
        Outcome {
            result,
            converged: true,
            trace: Vec::new(),
            failure: None,
        }
    }

    pub fn failed(e: &ergame::Error) -> Self {
        Outcome {
            result: json!({ "error": e.to_string() }),
            converged: false,
            trace: Vec::new(),
            failure: Some(e.to_string()),
        }
    }

    fn from_reports(reports: &[NashReport], result: Value) -> Self {
        let trace = reports
            .iter()
            .enumerate()
            .flat_map(|(run, r)| r.trace.iter().map(move |e| TraceRow { run, entry: e.clone() }))
            .collect();
        Outcome {
            result,
            converged: reports.iter().any(|r| r.converged),
            trace,
            failure: None,
        }
    }
}

fn value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Usage(format!("cannot encode result: {e}")))
}

fn parse<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn invalid(path: &Path) -> impl FnOnce(ergame::Error) -> CliError + '_ {
    move |source| CliError::Invalid {
        path: path.to_path_buf(),
        source,
    }
}

fn record(config: &mut RunConfig, key: &'static str, path: &Path) {
    config.inputs.insert(key, path.display().to_string());
}

fn load_game(path: &Path, config: &mut RunConfig, fallback: Option<Mode>) -> Result<GameSpec, CliError> {
    record(config, "game", path);
    let mut doc: GameDoc = parse(path)?;
    doc.set_word_cap(config.word_cap);
    let mode = config
        .mode
        .or(doc.mode)
        .or(fallback)
        .ok_or_else(|| CliError::Usage(format!("{}: no mode in the file; pass --mode", path.display())))?;
    config.mode = Some(mode);
    doc.into_game(Some(mode)).map_err(invalid(path))
}

fn load_profile(path: &Path, config: &mut RunConfig, game: &GameSpec) -> Result<StrategyProfile, CliError> {
    record(config, "profile", path);
    let mut doc: ProfileDoc = parse(path)?;
    doc.set_word_cap(config.word_cap);
    let profile = StrategyProfile::try_from(doc).map_err(invalid(path))?;
    profile.check_against(game).map_err(invalid(path))?;
    Ok(profile)
}

fn load_measure(path: &Path, key: &'static str, config: &mut RunConfig) -> Result<MarkovMeasure, CliError> {
    record(config, key, path);
    let mut doc: MeasureDoc = parse(path)?;
    doc.shift.word_cap = Some(config.word_cap);
    MarkovMeasure::try_from(doc).map_err(invalid(path))
}

fn load_potential(path: &Path, key: &'static str, config: &mut RunConfig) -> Result<CylinderFunction, CliError> {
    record(config, key, path);
    let mut doc: PotentialDoc = parse(path)?;
    doc.shift.word_cap = Some(config.word_cap);
    CylinderFunction::try_from(doc).map_err(invalid(path))
}

fn load_joint(path: &Path, key: &'static str, config: &mut RunConfig) -> Result<JointCylinderFunction, CliError> {
    record(config, key, path);
    let mut doc: JointPotentialDoc = parse(path)?;
    doc.word_cap = Some(config.word_cap);
    JointCylinderFunction::try_from(doc).map_err(invalid(path))
}

pub fn execute(cli: &Cli, config: &mut RunConfig) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Eval { game, profile } => {
            let g = load_game(game, config, None)?;
            let p = load_profile(profile, config, &g)?;
            Ok(Outcome::done(json!({
                "payoff1": payoff(&g, &p, Player::One)?,
                "payoff2": payoff(&g, &p, Player::Two)?,
                "integral1": integrate_product(g.a1(), &p.mu, &p.nu)?,
                "integral2": integrate_product(g.a2(), &p.mu, &p.nu)?,
                "entropy_mu": entropy(&p.mu),
                "entropy_nu": entropy(&p.nu),
            })))
        }
        Command::Br {
            game,
            profile,
            potential,
        } => {
            if let Some(path) = potential {
                let psi = load_potential(path, "potential", config)?;
                let mode = *config.mode.get_or_insert(Mode::Ergodic);
                return Ok(Outcome::done(json!({ "potential": respond(&psi, mode)? })));
            }
            let (Some(game), Some(profile)) = (game, profile) else {
                return Err(CliError::Usage("br needs a game and a profile, or --potential".into()));
            };
            let g = load_game(game, config, None)?;
            let p = load_profile(profile, config, &g)?;
            let psi1 = induced_potential_x(g.a1(), &p.nu)?;
            let psi2 = induced_potential_y(g.a2(), &p.mu)?;
            Ok(Outcome::done(json!({
                "player1": respond(&psi1, g.mode())?,
                "player2": respond(&psi2, g.mode())?,
            })))
        }
        Command::Nash {
            game,
            method,
            random_starts,
        } => {
            let g = load_game(game, config, None)?;
            let (method, max_iter) = match method {
                MethodArg::Iteration => (Method::Iteration, ITERATION_MAX_ITER),
                MethodArg::FictitiousPlay => (Method::FictitiousPlay, FICTITIOUS_PLAY_MAX_ITER),
            };
            let tol = *config.tol.get_or_insert(default_tolerance(g.mode(), method));
            let max_iter = *config.max_iter.get_or_insert(max_iter);
            config.method = Some(method.name());
            config.random_starts = Some(*random_starts);
            let reports = nash_search(&g, method, &SearchOptions::new(tol, max_iter), *random_starts, config.seed)?;
            let result = json!({ "best": best_report(&reports), "runs": value(&reports)? });
            Ok(Outcome::from_reports(&reports, result))
        }
        Command::Zerosum { game } => {
            let g = load_game(game, config, Some(Mode::Ergodic))?;
            let tol = *config.tol.get_or_insert(default_tolerance(g.mode(), Method::Direct));
            config.method = Some(Method::Direct.name());
            let report = zero_sum_solve(&g, tol)?;
            let result = value(&report)?;
            Ok(Outcome::from_reports(std::slice::from_ref(&report), result))
        }
        Command::Common { game, random_starts } => {
            let g = load_game(game, config, Some(Mode::Ergodic))?;
            let tol = *config.tol.get_or_insert(default_tolerance(g.mode(), Method::Direct));
            config.method = Some(Method::Direct.name());
            config.random_starts = Some(*random_starts);
            let report = common_payoff_maximize(&g, *random_starts, config.seed, tol)?;
            let result = value(&report)?;
            Ok(Outcome::from_reports(std::slice::from_ref(&report), result))
        }
        Command::Transport {
            a2,
            a1,
            mu,
            joint_stationary,
        } => {
            let table = load_joint(a2, "a2", config)?;
            let (mu, player1) = match (a1, mu) {
                (Some(path), _) => {
                    let psi = load_potential(path, "a1", config)?;
                    if psi.spec() != table.spec_x() {
                        return Err(CliError::Usage(format!(
                            "{}: the potential lives on a different shift than A2's x-side",
                            path.display()
                        )));
                    }
                    let br = solve_player1(&psi)?;
                    let summary = json!({
                        "value": br.value,
                        "certificate": br.certificate,
                        "multiplicity_flag": br.multiplicity_flag,
                    });
                    (br.optimizer, Some(summary))
                }
                (None, Some(path)) => (load_measure(path, "mu", config)?, None),
                (None, None) => return Err(CliError::Usage("transport needs --a1 or --mu".into())),
            };
            let depth = *config.depth.get_or_insert(minimum_depth(&table));
            config.joint_stationary = Some(*joint_stationary);
            let opts = TransportOptions {
                joint_stationary: *joint_stationary,
                ..TransportOptions::default()
            };
            let r = solve_cooperative_with(&table, &mu, depth, &opts)?;
            let mut result = value(&r)?;
            result["mu"] = value(&mu)?;
            if let Some(p1) = player1 {
                result["player1"] = p1;
            }
            Ok(Outcome::done(result))
        }
        Command::Wasserstein { mu, nu } => {
            let a = load_measure(mu, "mu", config)?;
            let b = load_measure(nu, "nu", config)?;
            let order = a.order().max(b.order());
            let cap = config.w1_word_cap;
            let d = a.spec().alphabet_size();
            let k = *config.depth.get_or_insert_with(|| {
                let mut k = 1;
                while k < MAX_DEFAULT_W1_DEPTH && d.checked_pow(k as u32 + 1).is_some_and(|n| n <= cap) {
                    k += 1;
                }
                k.max(order)
            });
            let plain = wasserstein1_distributions_capped(&marginal(&a, k)?, &marginal(&b, k)?, cap)?;
            let refined = if k >= order {
                Some(wasserstein1_markov_capped(&a, &b, k, cap)?)
            } else {
                None
            };
            Ok(Outcome::done(json!({
                "depth": k,
                "lo": plain.lo,
                "hi": plain.hi,
                "markov": refined,
            })))
        }
        Command::Verify { game, profile } => {
            let g = load_game(game, config, None)?;
            let p = load_profile(profile, config, &g)?;
            let tol = *config.tol.get_or_insert(default_tolerance(g.mode(), Method::Iteration));
            let cert = verify_epsilon_nash(&g, &p)?;
            let mut result = value(&cert)?;
            result["epsilon"] = json!(cert.epsilon());
            result["within_tolerance"] = json!(cert.epsilon() <= tol);
            Ok(Outcome::done(result))
        }
    }
}

/// Best response to a single potential in the given mode.
fn respond(psi: &CylinderFunction, mode: Mode) -> Result<Value, CliError> {
    Ok(match mode {
        Mode::Ergodic => {
            let br = br_ergodic(psi)?;
            json!({
                "value": br.value,
                "certificate": br.certificate,
                "multiplicity_flag": br.multiplicity_flag,
                "optimizer": value(&br.optimizer)?,
            })
        }
        Mode::Thermodynamic => {
            let g = gibbs(psi)?;
            json!({
                "value": g.value(),
                "pressure": g.pressure,
                "integral": g.integral,
                "entropy": g.entropy,
                "variational_residual": g.variational_residual,
                "optimizer": value(&g.gibbs)?,
            })
        }
    })
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        "run", "step", "w1_mu", "w1_nu", "payoff1", "payoff2", "eps1", "eps2", "multiplicity1", "multiplicity2",
    ])
    .map_err(csv_err)?;
    let flag = |f: Option<bool>| f.map(|b| b.to_string()).unwrap_or_default();
    for TraceRow { run, entry: e } in rows {
        w.write_record([
            run.to_string(),
            e.step.to_string(),
            g17(e.w1_mu),
            g17(e.w1_nu),
            g17(e.payoff1),
            g17(e.payoff2),
            g17(e.eps1),
            g17(e.eps2),
            flag(e.multiplicity1),
            flag(e.multiplicity2),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
