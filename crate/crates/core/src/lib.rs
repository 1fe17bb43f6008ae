//! Best responses, equilibria and transport plans for two-player games whose
//! strategies are shift-invariant measures on symbolic sequence spaces.

pub mod ergodic;
pub mod error;
pub mod equilibrium;
pub mod game;
pub mod io;
pub mod lp;
pub mod measures;
pub mod sample;
pub mod symbolic;
pub mod thermo;
pub mod transport;

pub use error::{Error, Result};

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

