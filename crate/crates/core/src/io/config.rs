//! The JSON configuration document.
//!
//! ```json
//! {
//!   "patterns": [{"name": "A", "n": 3, "m": 2, "digits": [[0,0],[1,1],[2,0]], "probs": [0.3, 0.3, 0.4]}],
//!   "frequencies": {"A": [1, 1]},
//!   "sequence": {"mode": "balanced"}
//! }
//! ```
//!
//! `sequence` defaults to balanced; `orientation` is optional and defaults
//! to `original`.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::patterns::{
    realize_sequence, renormalize, Frequency, Orientation, Pattern, PatternSequence, PatternSystem, SequenceMode,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDoc {
    pub name: String,
    pub n: u32,
    pub m: u32,
    pub digits: Vec<[u32; 2]>,
    pub probs: Vec<f64>,
}

/// Frequencies keyed by pattern name; duplicate keys are rejected.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct FrequencyMap(pub BTreeMap<String, [u64; 2]>);

impl<'de> Deserialize<'de> for FrequencyMap {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = FrequencyMap;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from pattern names to [numerator, denominator]")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<FrequencyMap, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = map.next_entry::<String, [u64; 2]>()? {
                    if out.contains_key(&k) {
                        return Err(serde::de::Error::custom(format!("duplicate frequency for `{k}`")));
                    }
                    out.insert(k, v);
                }
                Ok(FrequencyMap(out))
            }
        }
        de.deserialize_map(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub patterns: Vec<PatternDoc>,
    pub frequencies: FrequencyMap,
    #[serde(default = "balanced")]
    pub sequence: SequenceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
}

fn balanced() -> SequenceMode {
    SequenceMode::Balanced
}

/// A parsed configuration: the system and how its levels are scheduled.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub system: PatternSystem,
    pub sequence: SequenceMode,
}

impl Config {
    /// The level sequence; fails on explicit lists naming unknown patterns.
    pub fn realize(&self) -> Result<PatternSequence> {
        realize_sequence(&self.system, &self.sequence)
    }
}

/// Parse a configuration document.
pub fn parse_config(text: &str) -> Result<Config> {
    let doc: ConfigDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    from_document(doc)
}

pub fn parse_system(text: &str) -> Result<PatternSystem> {
    parse_config(text).map(|c| c.system)
}

pub fn from_document(doc: ConfigDocument) -> Result<Config> {
    let mut patterns = Vec::with_capacity(doc.patterns.len());
    let mut notes = Vec::new();
    for p in doc.patterns {
        if patterns.iter().any(|q: &Pattern| q.name == p.name) {
            return Err(Error::Schema(format!("duplicate pattern name `{}`", p.name)));
        }
        let mut probs = p.probs;
        if let Some(sum) = renormalize(&mut probs) {
            notes.push(format!(
                "pattern `{}`: probabilities summed to {sum:.17}; renormalized",
                p.name
            ));
        }
        let digits = p.digits.iter().map(|d| (d[0], d[1])).collect();
        patterns.push(Pattern::new(p.name, p.n, p.m, digits, probs));
    }
    for name in doc.frequencies.0.keys() {
        if !patterns.iter().any(|p| &p.name == name) {
            return Err(Error::Schema(format!("frequency given for unknown pattern `{name}`")));
        }
    }
    let mut frequencies = Vec::with_capacity(patterns.len());
    for p in &patterns {
        let [num, den] = *doc
            .frequencies
            .0
            .get(&p.name)
            .ok_or_else(|| Error::Schema(format!("no frequency for pattern `{}`", p.name)))?;
        if den == 0 {
            return Err(Error::Schema(format!("zero denominator in frequency of `{}`", p.name)));
        }
        frequencies.push(Frequency::new(num, den));
    }
    let mut system = PatternSystem::new(patterns, frequencies);
    system.orientation = doc.orientation.unwrap_or(Orientation::Original);
    system.notes = notes;
    Ok(Config {
        system,
        sequence: doc.sequence,
    })
}

pub fn to_document(system: &PatternSystem, sequence: &SequenceMode) -> ConfigDocument {
    let patterns = system
        .patterns
        .iter()
        .map(|p| PatternDoc {
            name: p.name.clone(),
            n: p.n,
            m: p.m,
            digits: p.digits.iter().map(|&(i, j)| [i, j]).collect(),
            probs: p.probs.clone(),
        })
        .collect();
    let frequencies = system
        .patterns
        .iter()
        .zip(&system.frequencies)
        .map(|(p, f)| (p.name.clone(), [*f.numer(), *f.denom()]))
        .collect();
    ConfigDocument {
        patterns,
        frequencies: FrequencyMap(frequencies),
        sequence: sequence.clone(),
        orientation: (system.orientation == Orientation::Transposed).then_some(Orientation::Transposed),
    }
}

/// Pretty-printed configuration document for a system.
pub fn serialize_config(system: &PatternSystem, sequence: &SequenceMode) -> String {
    let mut s = serde_json::to_string_pretty(&to_document(system, sequence)).expect("config serializes");
    s.push('\n');
    s
}
