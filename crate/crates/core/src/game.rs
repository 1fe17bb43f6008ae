//! Two-player games whose strategies are invariant measures: player 1 picks
//! `mu` on `X`, player 2 picks `nu` on `Y`, and player `i` receives
//! `int int A_i dmu dnu`, plus the entropy of their own measure in the
//! thermodynamic mode.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{entropy, integrate_product, MarkovMeasure};
use crate::symbolic::{JointCylinderFunction, ShiftSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Payoffs are the integrals alone.
    Ergodic,
    /// Each player also collects the entropy of their own measure.
    Thermodynamic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ergodic => "ergodic",
            Mode::Thermodynamic => "thermodynamic",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ergodic" => Ok(Mode::Ergodic),
            "thermodynamic" => Ok(Mode::Thermodynamic),
            other => Err(Error::GameStructure(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }
}

/// Payoff tables and mode. Both tables are indexed by `(x-word, y-word)`.
#[derive(Clone, Debug)]
pub struct GameSpec {
    a1: JointCylinderFunction,
    a2: JointCylinderFunction,
    mode: Mode,
}

impl GameSpec {
    pub fn new(a1: JointCylinderFunction, a2: JointCylinderFunction, mode: Mode) -> Result<Self> {
        if a1.spec_x() != a2.spec_x() || a1.spec_y() != a2.spec_y() {
            return Err(Error::SpecMismatch(
                "the two payoff tables live on different shifts".into(),
            ));
        }
        Ok(GameSpec { a1, a2, mode })
    }

    pub fn a1(&self) -> &JointCylinderFunction {
        &self.a1
    }

    pub fn a2(&self) -> &JointCylinderFunction {
        &self.a2
    }

    pub fn table(&self, player: Player) -> &JointCylinderFunction {
        match player {
            Player::One => &self.a1,
            Player::Two => &self.a2,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn spec_x(&self) -> &ShiftSpec {
        self.a1.spec_x()
    }

    pub fn spec_y(&self) -> &ShiftSpec {
        self.a1.spec_y()
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        GameSpec { mode, ..self.clone() }
    }

    /// `max |A2 + A1|` over the common table grid.
    pub fn zero_sum_defect(&self) -> f64 {
        let depth_x = self.a1.depth_x().max(self.a2.depth_x());
        let depth_y = self.a1.depth_y().max(self.a2.depth_y());
        match (self.a1.refine(depth_x, depth_y), self.a2.refine(depth_x, depth_y)) {
            (Ok(a), Ok(b)) => a.max_abs_diff(&b.map(|v| -v)).unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        }
    }

    /// `max |A2 - A1|` over the common table grid.
    pub fn common_payoff_defect(&self) -> f64 {
        let depth_x = self.a1.depth_x().max(self.a2.depth_x());
        let depth_y = self.a1.depth_y().max(self.a2.depth_y());
        match (self.a1.refine(depth_x, depth_y), self.a2.refine(depth_x, depth_y)) {
            (Ok(a), Ok(b)) => a.max_abs_diff(&b).unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        }
    }
}

/// A candidate equilibrium `(mu, nu)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub mu: MarkovMeasure,
    pub nu: MarkovMeasure,
}

impl StrategyProfile {
    pub fn new(mu: MarkovMeasure, nu: MarkovMeasure) -> Self {
        StrategyProfile { mu, nu }
    }

    pub fn check_against(&self, game: &GameSpec) -> Result<()> {
        if self.mu.spec() != game.spec_x() || self.nu.spec() != game.spec_y() {
            return Err(Error::SpecMismatch(
                "profile measures do not live on the game's shifts".into(),
            ));
        }
        Ok(())
    }
}

/// Payoff of `player` at `profile`.
pub fn payoff(game: &GameSpec, profile: &StrategyProfile, player: Player) -> Result<f64> {
    profile.check_against(game)?;
    let base = integrate_product(game.table(player), &profile.mu, &profile.nu)?;
    Ok(match game.mode {
        Mode::Ergodic => base,
        Mode::Thermodynamic => {
            base + match player {
                Player::One => entropy(&profile.mu),
                Player::Two => entropy(&profile.nu),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermodynamic_payoff_adds_own_entropy() {
        let s = ShiftSpec::full(2).unwrap();
        let zero = JointCylinderFunction::constant(&s, 1, &s, 1, 0.0).unwrap();
        let game = GameSpec::new(zero.clone(), zero, Mode::Thermodynamic).unwrap();
        let u = MarkovMeasure::uniform_bernoulli(&s).unwrap();
        let d = MarkovMeasure::dirac(&s, 0).unwrap();
        let profile = StrategyProfile::new(u, d);
        assert!((payoff(&game, &profile, Player::One).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(payoff(&game, &profile, Player::Two).unwrap(), 0.0);
    }

    #[test]
    fn mode_text() {
        assert_eq!("ergodic".parse::<Mode>().unwrap(), Mode::Ergodic);
        assert_eq!(Mode::Thermodynamic.to_string(), "thermodynamic");
        assert!("other".parse::<Mode>().is_err());
    }
}
