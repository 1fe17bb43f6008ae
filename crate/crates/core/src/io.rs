//! JSON documents for potentials, measures, games and profiles.
//!
//! Words are written as strings of base-36 digits (`"0"`..`"9"`, `"a"`..`"z"`),
//! so lexicographic order of the keys is the enumeration order of the words.
//! Every document names its shift through `"d"`, an optional list of
//! `"forbidden"` blocks (all of one length `order + 1`) and an optional
//! metric base `"theta"`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{GameSpec, Mode, StrategyProfile};
use crate::measures::{fill_uniform_row, MarkovMeasure, WordDistribution};
use crate::symbolic::{
    enumerate_words, position, CylinderFunction, JointCylinderFunction, MetricParams, ShiftSpec,
    Word,
};

/// Shift description shared by all documents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftDoc {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Enumeration cap for the built shift; not part of the file format.
    #[serde(skip)]
    pub word_cap: Option<usize>,
}

impl ShiftDoc {
    pub fn from_spec(spec: &ShiftSpec) -> Self {
        let theta = spec.metric().base;
        ShiftDoc {
            d: spec.alphabet_size(),
            forbidden: spec.forbidden().iter().map(Word::to_string).collect(),
            theta: (theta != MetricParams::default().base).then_some(theta),
            word_cap: None,
        }
    }

    pub fn to_spec(&self) -> Result<ShiftSpec> {
        let spec = if self.forbidden.is_empty() {
            ShiftSpec::full(self.d)?
        } else {
            let words = self
                .forbidden
                .iter()
                .map(|s| Word::parse_for(s, self.d))
                .collect::<Result<Vec<_>>>()?;
            let len = words[0].len();
            if words.iter().any(|w| w.len() != len) || len < 2 {
                return Err(Error::InvalidSpec(
                    "forbidden blocks must share one length of at least 2".into(),
                ));
            }
            ShiftSpec::with_forbidden(self.d, len - 1, words)?
        };
        let spec = match self.word_cap {
            Some(cap) => spec.with_word_cap(cap),
            None => spec,
        };
        match self.theta {
            Some(t) => Ok(spec.with_metric(MetricParams::new(t)?)),
            None => Ok(spec),
        }
    }
}

fn parse_word(s: &str, spec: &ShiftSpec, len: usize) -> Result<Word> {
    let w = Word::parse_for(s, spec.alphabet_size())?;
    if w.len() != len {
        return Err(Error::InvalidWord {
            word: s.to_string(),
            reason: format!("expected length {len}"),
        });
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDoc {
    #[serde(flatten)]
    pub shift: ShiftDoc,
    pub depth: usize,
    pub table: BTreeMap<String, f64>,
}

impl From<&CylinderFunction> for PotentialDoc {
    fn from(psi: &CylinderFunction) -> Self {
        PotentialDoc {
            shift: ShiftDoc::from_spec(psi.spec()),
            depth: psi.depth(),
            table: psi.iter().map(|(w, v)| (w.to_string(), v)).collect(),
        }
    }
}

impl TryFrom<PotentialDoc> for CylinderFunction {
    type Error = Error;

    fn try_from(doc: PotentialDoc) -> Result<Self> {
        let spec = doc.shift.to_spec()?;
        let entries = doc
            .table
            .iter()
            .map(|(k, v)| Ok((parse_word(k, &spec, doc.depth)?, *v)))
            .collect::<Result<Vec<_>>>()?;
        CylinderFunction::from_entries(&spec, doc.depth, entries)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPotentialDoc {
    pub d_x: usize,
    pub d_y: usize,
    pub depth_x: usize,
    pub depth_y: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden_x: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden_y: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// `table[x-word][y-word]`.
    pub table: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(skip)]
    pub word_cap: Option<usize>,
}

impl From<&JointCylinderFunction> for JointPotentialDoc {
    fn from(a: &JointCylinderFunction) -> Self {
        let sx = ShiftDoc::from_spec(a.spec_x());
        let sy = ShiftDoc::from_spec(a.spec_y());
        let ny = a.words_y().len();
        let table = a
            .words_x()
            .iter()
            .enumerate()
            .map(|(i, wx)| {
                let row = a
                    .words_y()
                    .iter()
                    .enumerate()
                    .map(|(j, wy)| (wy.to_string(), a.table()[i * ny + j]))
                    .collect();
                (wx.to_string(), row)
            })
            .collect();
        JointPotentialDoc {
            d_x: sx.d,
            d_y: sy.d,
            depth_x: a.depth_x(),
            depth_y: a.depth_y(),
            forbidden_x: sx.forbidden,
            forbidden_y: sy.forbidden,
            theta: sx.theta,
            table,
            word_cap: None,
        }
    }
}

impl TryFrom<JointPotentialDoc> for JointCylinderFunction {
    type Error = Error;

    fn try_from(doc: JointPotentialDoc) -> Result<Self> {
        let spec_x = ShiftDoc {
            d: doc.d_x,
            forbidden: doc.forbidden_x,
            theta: doc.theta,
            word_cap: doc.word_cap,
        }
        .to_spec()?;
        let spec_y = ShiftDoc {
            d: doc.d_y,
            forbidden: doc.forbidden_y,
            theta: doc.theta,
            word_cap: doc.word_cap,
        }
        .to_spec()?;
        let mut entries = Vec::new();
        for (kx, row) in &doc.table {
            let wx = parse_word(kx, &spec_x, doc.depth_x)?;
            for (ky, v) in row {
                entries.push((wx.clone(), parse_word(ky, &spec_y, doc.depth_y)?, *v));
            }
        }
        JointCylinderFunction::from_entries(&spec_x, doc.depth_x, &spec_y, doc.depth_y, entries)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureDoc {
    #[serde(flatten)]
    pub shift: ShiftDoc,
    pub order: usize,
    /// Stationary weights; absent words carry no mass.
    pub pi: BTreeMap<String, f64>,
    /// Transition rows `P[word][symbol]`; absent entries are 0 and a row may
    /// be absent only for a word without mass.
    #[serde(rename = "P")]
    pub transitions: BTreeMap<String, BTreeMap<String, f64>>,
}

impl From<&MarkovMeasure> for MeasureDoc {
    fn from(mu: &MarkovMeasure) -> Self {
        let spec = mu.spec();
        let d = spec.alphabet_size();
        let pi = mu.words().iter().zip(mu.pi()).map(|(w, p)| (w.to_string(), *p)).collect();
        let transitions = mu
            .words()
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let row = (0..d)
                    .filter(|&b| spec.allowed(w.symbols(), b as u8))
                    .map(|b| (Word::new(vec![b as u8]).to_string(), mu.transition(i, b)))
                    .collect();
                (w.to_string(), row)
            })
            .collect();
        MeasureDoc {
            shift: ShiftDoc::from_spec(spec),
            order: mu.order(),
            pi,
            transitions,
        }
    }
}

impl TryFrom<MeasureDoc> for MarkovMeasure {
    type Error = Error;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        let spec = doc.shift.to_spec()?;
        let words = enumerate_words(&spec, doc.order)?;
        let d = spec.alphabet_size();
        let mut pi = vec![0.0; words.len()];
        for (k, p) in &doc.pi {
            let w = parse_word(k, &spec, doc.order)?;
            let i = position(&words, w.symbols()).ok_or_else(|| Error::InvalidMeasure {
                constraint: "support",
                detail: format!("`{k}` is not an allowed word"),
            })?;
            pi[i] = *p;
        }
        let mut transitions = vec![f64::NAN; words.len() * d];
        for (k, row) in &doc.transitions {
            let w = parse_word(k, &spec, doc.order)?;
            let i = position(&words, w.symbols()).ok_or_else(|| Error::InvalidMeasure {
                constraint: "support",
                detail: format!("`{k}` is not an allowed word"),
            })?;
            transitions[i * d..(i + 1) * d].iter_mut().for_each(|p| *p = 0.0);
            for (s, p) in row {
                let b = parse_word(s, &spec, 1)?.symbols()[0] as usize;
                transitions[i * d + b] = *p;
            }
        }
        for (i, w) in words.iter().enumerate() {
            let row = &mut transitions[i * d..(i + 1) * d];
            if row[0].is_nan() {
                if pi[i] > 0.0 {
                    return Err(Error::InvalidMeasure {
                        constraint: "rows of P sum to 1",
                        detail: format!("row `{w}` is missing but carries mass {}", pi[i]),
                    });
                }
                fill_uniform_row(&spec, w.symbols(), row);
            }
        }
        MarkovMeasure::new(&spec, doc.order, pi, transitions)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionDoc {
    #[serde(flatten)]
    pub shift: ShiftDoc,
    pub depth: usize,
    pub weights: BTreeMap<String, f64>,
}

impl From<&WordDistribution> for DistributionDoc {
    fn from(p: &WordDistribution) -> Self {
        DistributionDoc {
            shift: ShiftDoc::from_spec(p.spec()),
            depth: p.depth(),
            weights: p.iter().map(|(w, v)| (w.to_string(), v)).collect(),
        }
    }
}

impl TryFrom<DistributionDoc> for WordDistribution {
    type Error = Error;

    fn try_from(doc: DistributionDoc) -> Result<Self> {
        let spec = doc.shift.to_spec()?;
        let words = enumerate_words(&spec, doc.depth)?;
        let mut weights = vec![0.0; words.len()];
        for (k, v) in &doc.weights {
            let w = parse_word(k, &spec, doc.depth)?;
            let i = position(&words, w.symbols()).ok_or_else(|| Error::InvalidMeasure {
                constraint: "support",
                detail: format!("`{k}` is not an allowed word"),
            })?;
            weights[i] = *v;
        }
        WordDistribution::new(&spec, doc.depth, weights)
    }
}

/// A game file: two payoff tables and an optional default mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameDoc {
    pub a1: JointPotentialDoc,
    pub a2: JointPotentialDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
}

impl GameDoc {
    /// Builds the game, with `mode` overriding the file's mode.
    pub fn into_game(self, mode: Option<Mode>) -> Result<GameSpec> {
        let mode = mode.or(self.mode).ok_or_else(|| {
            Error::GameStructure("no mode given (ergodic or thermodynamic)".into())
        })?;
        GameSpec::new(self.a1.try_into()?, self.a2.try_into()?, mode)
    }

    pub fn set_word_cap(&mut self, cap: usize) {
        self.a1.word_cap = Some(cap);
        self.a2.word_cap = Some(cap);
    }

    pub fn from_game(game: &GameSpec) -> Self {
        GameDoc {
            a1: game.a1().into(),
            a2: game.a2().into(),
            mode: Some(game.mode()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub mu: MeasureDoc,
    pub nu: MeasureDoc,
}

impl ProfileDoc {
    pub fn set_word_cap(&mut self, cap: usize) {
        self.mu.shift.word_cap = Some(cap);
        self.nu.shift.word_cap = Some(cap);
    }
}

impl TryFrom<ProfileDoc> for StrategyProfile {
    type Error = Error;

    fn try_from(doc: ProfileDoc) -> Result<Self> {
        Ok(StrategyProfile::new(doc.mu.try_into()?, doc.nu.try_into()?))
    }
}

macro_rules! serde_via_doc {
    ($ty:ty, $doc:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                <$doc>::from(self).serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let doc = <$doc>::deserialize(d)?;
                <$ty>::try_from(doc).map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via_doc!(CylinderFunction, PotentialDoc);
serde_via_doc!(JointCylinderFunction, JointPotentialDoc);
serde_via_doc!(MarkovMeasure, MeasureDoc);
serde_via_doc!(WordDistribution, DistributionDoc);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_requires_every_word() {
        let json = r#"{"d": 2, "depth": 2, "table": {"00": 1, "01": 2, "10": 3}}"#;
        let err = serde_json::from_str::<CylinderFunction>(json).unwrap_err();
        assert!(err.to_string().contains("missing"));
        let json = r#"{"d": 2, "depth": 2, "table": {"00": 1, "01": 2, "10": 3, "11": 4}}"#;
        let psi: CylinderFunction = serde_json::from_str(json).unwrap();
        assert_eq!(psi.table(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn measure_roundtrip() {
        let s = ShiftSpec::full(3).unwrap();
        let mu = MarkovMeasure::from_transitions(&s, 1, vec![0.2, 0.3, 0.5, 0.1, 0.1, 0.8, 0.6, 0.2, 0.2]).unwrap();
        let text = serde_json::to_string(&mu).unwrap();
        let back: MarkovMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn sparse_dirac_measure() {
        let json = r#"{"d": 2, "order": 1, "pi": {"1": 1.0}, "P": {"1": {"1": 1.0}}}"#;
        let mu: MarkovMeasure = serde_json::from_str(json).unwrap();
        assert_eq!(mu, MarkovMeasure::dirac(&ShiftSpec::full(2).unwrap(), 1).unwrap());
    }

    #[test]
    fn invalid_measure_names_constraint() {
        let json = r#"{"d": 2, "order": 1, "pi": {"0": 0.5, "1": 0.5}, "P": {"0": {"0": 0.9, "1": 0.1}, "1": {"0": 0.5, "1": 0.5}}}"#;
        let err = serde_json::from_str::<MarkovMeasure>(json).unwrap_err();
        assert!(err.to_string().contains("stationarity"));
    }

    #[test]
    fn joint_roundtrip_and_sft() {
        let sx = ShiftSpec::with_forbidden(2, 1, vec![Word::new(vec![1, 1])]).unwrap();
        let sy = ShiftSpec::full(3).unwrap();
        let a = JointCylinderFunction::from_fn(&sx, 2, &sy, 1, |x, y| x[0] as f64 - 2.0 * y[0] as f64).unwrap();
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"forbidden_x\":[\"11\"]"));
        let back: JointCylinderFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }
}
