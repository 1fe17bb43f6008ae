use thiserror::Error;

use crate::lp::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shift specification: {0}")]
    InvalidSpec(String),

    #[error("transition graph on length-{order} words is not strongly connected")]
    NotStronglyConnected { order: usize },

    #[error("{what}: {count} states exceeds the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: usize,
        cap: usize,
    },

    #[error("word length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid word `{word}`: {reason}")]
    InvalidWord { word: String, reason: String },

    #[error("invalid potential table: {0}")]
    InvalidTable(String),

    /// A measure failed one of its structural invariants. `constraint` names it.
    #[error("measure violates `{constraint}`: {detail}")]
    InvalidMeasure {
        constraint: &'static str,
        detail: String,
    },

    #[error("shift specification mismatch: {0}")]
    SpecMismatch(String),

    #[error("requested depth {requested} is below the minimum {minimum}")]
    DepthTooSmall { requested: usize, minimum: usize },

    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),

    #[error("power iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("self-check failed: {0}")]
    SelfCheck(String),

    #[error("game structure: {0}")]
    GameStructure(String),
}
