//! `ergame`: best responses, equilibria, Wasserstein enclosures and
//! transport plans from JSON game, potential and measure files.

mod commands;
mod format;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ergame::game::Mode;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "ergame", version, about = "Solvers for ergodic and thermodynamic games on shift spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Payoff mode; overrides the mode stored in a game file.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,

    /// Word depth for Wasserstein enclosures and transport plans.
    #[arg(long, global = true)]
    pub depth: Option<usize>,

    /// Certification tolerance on the best-response deficits.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[arg(long, global = true)]
    pub max_iter: Option<usize>,

    /// Seed for random starts.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Report path; the report goes to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Write iteration traces as CSV.
    #[arg(long, global = true)]
    pub trace_csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Payoffs, integrals and entropies at a profile.
    Eval { game: PathBuf, profile: PathBuf },
    /// Best responses to each side of a profile, or to a single potential.
    Br {
        game: Option<PathBuf>,
        profile: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["game", "profile"])]
        potential: Option<PathBuf>,
    },
    /// Equilibrium search from the canonical starts plus seeded random starts.
    Nash {
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Iteration)]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        random_starts: usize,
    },
    /// Exact solution of a zero-sum ergodic game.
    Zerosum { game: PathBuf },
    /// Global maximizer of a common-payoff ergodic game.
    Common {
        game: PathBuf,
        #[arg(long, default_value_t = 4)]
        random_starts: usize,
    },
    /// Cooperative transport plan for player 2 given player 1's strategy.
    Transport {
        /// Player 2's payoff table on `X x Y`.
        #[arg(long)]
        a2: PathBuf,
        /// Player 1's payoff, a potential on `X`; player 1 plays its ergodic
        /// best response.
        #[arg(long, required_unless_present = "mu", conflicts_with = "mu")]
        a1: Option<PathBuf>,
        /// Player 1's strategy, given directly.
        #[arg(long)]
        mu: Option<PathBuf>,
        /// Constrain the plan to a jointly invariant measure.
        #[arg(long)]
        joint_stationary: bool,
    },
    /// Wasserstein-1 enclosure between two measures.
    Wasserstein { mu: PathBuf, nu: PathBuf },
    /// Best-response deficits of a profile.
    Verify { game: PathBuf, profile: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Br { .. } => "br",
            Command::Nash { .. } => "nash",
            Command::Zerosum { .. } => "zerosum",
            Command::Common { .. } => "common",
            Command::Transport { .. } => "transport",
            Command::Wasserstein { .. } => "wasserstein",
            Command::Verify { .. } => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Ergodic,
    Thermodynamic,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Ergodic => Mode::Ergodic,
            ModeArg::Thermodynamic => Mode::Thermodynamic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Iteration,
    FictitiousPlay,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Invalid { path: PathBuf, source: ergame::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] ergame::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Csv { .. } => 1,
            CliError::Parse { source, .. } if source.is_io() => 1,
            CliError::Parse { .. } | CliError::Invalid { .. } | CliError::Usage(_) => 2,
            CliError::Solver(e) if is_solver_failure(e) => 3,
            CliError::Solver(_) => 2,
        }
    }
}

/// Errors raised by a solver rather than by its input.
fn is_solver_failure(e: &ergame::Error) -> bool {
    matches!(
        e,
        ergame::Error::NonConvergence { .. } | ergame::Error::Lp(_) | ergame::Error::SelfCheck(_)
    )
}

/// Everything that determines a run, echoed into its report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub inputs: BTreeMap<&'static str, String>,
    pub mode: Option<Mode>,
    pub method: Option<&'static str>,
    pub depth: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: u64,
    pub random_starts: Option<usize>,
    pub joint_stationary: Option<bool>,
    pub word_cap: usize,
    pub w1_word_cap: usize,
    pub out: Option<String>,
    pub trace_csv: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'static str,
    version: String,
    config: &'a RunConfig,
    converged: bool,
    result: &'a serde_json::Value,
}

fn word_caps() -> Result<(usize, usize), CliError> {
    match std::env::var("ERGAME_WORD_CAP") {
        Ok(s) => {
            let cap = s
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("ERGAME_WORD_CAP must be a positive integer, got `{s}`")))?;
            if cap == 0 {
                return Err(CliError::Usage("ERGAME_WORD_CAP must be positive".into()));
            }
            Ok((cap, cap))
        }
        Err(_) => Ok((
            ergame::symbolic::DEFAULT_WORD_CAP,
            ergame::measures::DEFAULT_W1_WORD_CAP,
        )),
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let (word_cap, w1_word_cap) = word_caps()?;
    let display = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let mut config = RunConfig {
        command: cli.command.name(),
        inputs: BTreeMap::new(),
        mode: cli.mode.map(Mode::from),
        method: None,
        depth: cli.depth,
        tol: cli.tol,
        max_iter: cli.max_iter,
        seed: cli.seed,
        random_starts: None,
        joint_stationary: None,
        word_cap,
        w1_word_cap,
        out: display(&cli.out),
        trace_csv: display(&cli.trace_csv),
    };
    let outcome = match commands::execute(cli, &mut config) {
        Ok(o) => o,
        Err(CliError::Solver(e)) if is_solver_failure(&e) => commands::Outcome::failed(&e),
        Err(e) => return Err(e),
    };

    let report = Report {
        command: config.command,
        version: format!("ergame {}", ergame::VERSION),
        config: &config,
        converged: outcome.converged,
        result: &outcome.result,
    };
    let bytes = format::to_json(&report).map_err(|e| CliError::Usage(format!("cannot encode report: {e}")))?;
    match &cli.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    if let Some(path) = &cli.trace_csv {
        commands::write_trace(path, &outcome.trace)?;
    }
    if outcome.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("ergame: {}", outcome.failure.as_deref().unwrap_or("no run reached the tolerance"));
        Ok(ExitCode::from(3))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ergame: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
