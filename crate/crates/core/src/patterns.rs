//! Patterns, pattern systems and the deterministic level sequence.
//!
//! A [`Pattern`] is one construction step `(n, m, D)` together with a
//! probability vector on `D`. A [`PatternSystem`] is the finite family of
//! patterns with exact rational frequencies, and a [`PatternSequence`]
//! assigns a pattern to every level `k ≥ 1` so that those frequencies are
//! realized with bounded discrepancy.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grid cell `(i, j)`: column `i` in `0..n`, row `j` in `0..m`.
pub type Digit = (u32, u32);

/// Exact level frequency of a pattern.
pub type Frequency = Ratio<u64>;

/// Tolerance on `Σ p = 1` for input probability vectors.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub name: String,
    /// Horizontal subdivision count.
    pub n: u32,
    /// Vertical subdivision count.
    pub m: u32,
    pub digits: Vec<Digit>,
    pub probs: Vec<f64>,
}

impl Pattern {
    pub fn new(name: impl Into<String>, n: u32, m: u32, digits: Vec<Digit>, probs: Vec<f64>) -> Self {
        Pattern {
            name: name.into(),
            n,
            m,
            digits,
            probs,
        }
    }

    /// Pattern with the uniform probability vector on its digits.
    pub fn uniform(name: impl Into<String>, n: u32, m: u32, digits: Vec<Digit>) -> Self {
        let p = 1.0 / digits.len() as f64;
        let probs = vec![p; digits.len()];
        Pattern::new(name, n, m, digits, probs)
    }

    /// Number of digits, `r_γ`.
    pub fn card(&self) -> usize {
        self.digits.len()
    }

    /// `r_γ(j)`: number of digits in each row `j < m`.
    pub fn row_occupancy(&self) -> Vec<usize> {
        let mut r = vec![0; self.m as usize];
        for &(_, j) in &self.digits {
            if let Some(c) = r.get_mut(j as usize) {
                *c += 1;
            }
        }
        r
    }

    /// `r̂_γ(i)`: number of digits in each column `i < n`.
    pub fn col_occupancy(&self) -> Vec<usize> {
        let mut r = vec![0; self.n as usize];
        for &(i, _) in &self.digits {
            if let Some(c) = r.get_mut(i as usize) {
                *c += 1;
            }
        }
        r
    }

    /// Sorted distinct occupied rows.
    pub fn occupied_rows(&self) -> Vec<u32> {
        let mut rows: Vec<u32> = self.digits.iter().map(|d| d.1).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    /// Sorted distinct occupied columns.
    pub fn occupied_cols(&self) -> Vec<u32> {
        let mut cols: Vec<u32> = self.digits.iter().map(|d| d.0).collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    /// Row marginal `q(j) = Σ_{i:(i,j)∈D} p(i,j)`, zero on empty rows.
    pub fn row_marginal(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.m as usize];
        for (&(_, j), &p) in self.digits.iter().zip(&self.probs) {
            q[j as usize] += p;
        }
        q
    }

    /// Column marginal `q̂(i) = Σ_{j:(i,j)∈D} p(i,j)`, zero on empty columns.
    pub fn col_marginal(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.n as usize];
        for (&(i, _), &p) in self.digits.iter().zip(&self.probs) {
            q[i as usize] += p;
        }
        q
    }

    pub fn digit_index(&self, digit: Digit) -> Option<usize> {
        self.digits.iter().position(|&d| d == digit)
    }

    /// Swap the axes: `(n, m, {(i,j)})` becomes `(m, n, {(j,i)})`.
    pub fn transpose(&self) -> Pattern {
        Pattern {
            name: self.name.clone(),
            n: self.m,
            m: self.n,
            digits: self.digits.iter().map(|&(i, j)| (j, i)).collect(),
            probs: self.probs.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Original,
    Transposed,
}

impl Orientation {
    pub fn flipped(self) -> Orientation {
        match self {
            Orientation::Original => Orientation::Transposed,
            Orientation::Transposed => Orientation::Original,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Original => f.write_str("original"),
            Orientation::Transposed => f.write_str("transposed"),
        }
    }
}

/// The finite pattern family `Γ` with its frequency vector.
///
/// `frequencies[g]` is the frequency of `patterns[g]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternSystem {
    pub patterns: Vec<Pattern>,
    pub frequencies: Vec<Frequency>,
    pub orientation: Orientation,
    /// Parse-time adjustments (probability renormalization), surfaced by
    /// [`validate_system`].
    pub notes: Vec<String>,
}

impl PatternSystem {
    pub fn new(patterns: Vec<Pattern>, frequencies: Vec<Frequency>) -> Self {
        PatternSystem {
            patterns,
            frequencies,
            orientation: Orientation::Original,
            notes: Vec::new(),
        }
    }

    /// One pattern used at every level.
    pub fn single(pattern: Pattern) -> Self {
        PatternSystem::new(vec![pattern], vec![Frequency::one()])
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.patterns.iter().position(|p| p.name == name)
    }

    pub fn frequency(&self, name: &str) -> Option<Frequency> {
        self.index_of(name).map(|g| self.frequencies[g])
    }

    pub fn frequency_f64(&self, g: usize) -> f64 {
        let f = self.frequencies[g];
        *f.numer() as f64 / *f.denom() as f64
    }

    /// Indices of patterns with positive frequency; these are the patterns
    /// that occur with positive density in the level sequence.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&g| !self.frequencies[g].is_zero())
    }

    /// `N⁺ = max_γ max(n_γ, m_γ)`.
    pub fn n_plus(&self) -> u32 {
        self.patterns.iter().map(|p| p.n.max(p.m)).max().unwrap_or(0)
    }

    /// `ζ = Σ f log m / Σ f log n`.
    pub fn zeta(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (g, p) in self.patterns.iter().enumerate() {
            let f = self.frequency_f64(g);
            num += f * (p.m as f64).ln();
            den += f * (p.n as f64).ln();
        }
        num / den
    }

    /// Swap the axes of every pattern; frequencies are unchanged and the
    /// orientation flag flips.
    pub fn transpose(&self) -> PatternSystem {
        PatternSystem {
            patterns: self.patterns.iter().map(Pattern::transpose).collect(),
            frequencies: self.frequencies.clone(),
            orientation: self.orientation.flipped(),
            notes: self.notes.clone(),
        }
    }

    /// Exact `Σ f_γ`.
    pub fn frequency_sum(&self) -> BigRational {
        self.frequencies
            .iter()
            .map(|f| BigRational::new(BigInt::from(*f.numer()), BigInt::from(*f.denom())))
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

/// Renormalize a probability vector whose sum is within
/// [`PROB_SUM_TOLERANCE`] of one. Returns the input sum when the vector was
/// changed; sums already within rounding noise of one are left untouched so
/// that serialization round-trips are exact.
pub fn renormalize(probs: &mut [f64]) -> Option<f64> {
    let sum: f64 = probs.iter().sum();
    let noise = 2.0 * probs.len() as f64 * f64::EPSILON;
    let gap = (sum - 1.0).abs();
    if gap <= noise || gap > PROB_SUM_TOLERANCE {
        return None;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    Some(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub severity: Severity,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupancy {
    pub pattern: String,
    /// `r_γ(j)` for `j < m`.
    pub rows: Vec<usize>,
    /// `r̂_γ(i)` for `i < n`.
    pub cols: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub messages: Vec<Message>,
    pub zeta: Option<f64>,
    pub n_plus: Option<u32>,
    pub occupancy: Vec<Occupancy>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(|m| m.severity == Severity::Error)
    }

    pub fn push(&mut self, severity: Severity, text: impl Into<String>) {
        self.messages.push(Message {
            severity,
            text: text.into(),
        });
        self.ok = !self.messages.iter().any(|m| m.severity == Severity::Error);
    }

    /// Converts a failed report into [`Error::Invalid`].
    pub fn into_result(self) -> Result<ValidationReport> {
        if self.ok {
            Ok(self)
        } else {
            let text: Vec<&str> = self.errors().map(|m| m.text.as_str()).collect();
            Err(Error::Invalid(text.join("; ")))
        }
    }
}

/// Check every standing assumption on a parsed system.
pub fn validate_system(sys: &PatternSystem) -> ValidationReport {
    use Severity::*;
    let mut report = ValidationReport {
        ok: true,
        messages: Vec::new(),
        zeta: None,
        n_plus: None,
        occupancy: Vec::new(),
    };
    for note in &sys.notes {
        report.push(Info, note.clone());
    }
    if sys.is_empty() {
        report.push(Error, "system has no patterns");
        return report;
    }
    if sys.frequencies.len() != sys.patterns.len() {
        report.push(Error, "every pattern needs exactly one frequency");
    }

    let mut names = HashSet::new();
    for p in &sys.patterns {
        let name = &p.name;
        if !names.insert(name.as_str()) {
            report.push(Error, format!("duplicate pattern name `{name}`"));
        }
        if p.n < 2 || p.m < 2 {
            report.push(
                Error,
                format!("pattern `{name}`: n, m >= 2 violated (n = {}, m = {})", p.n, p.m),
            );
        }
        let mut seen = HashSet::new();
        for &(i, j) in &p.digits {
            if i >= p.n || j >= p.m {
                report.push(
                    Error,
                    format!("pattern `{name}`: digit out of range ({i}, {j}) in a {}x{} grid", p.n, p.m),
                );
            }
            if !seen.insert((i, j)) {
                report.push(Error, format!("pattern `{name}`: duplicate digit ({i}, {j})"));
            }
        }
        if p.card() < 2 {
            report.push(
                Error,
                format!("pattern `{name}`: r_γ >= 2 violated (card(D) = {})", p.card()),
            );
        }
        if p.probs.len() != p.digits.len() {
            report.push(
                Error,
                format!(
                    "pattern `{name}`: {} probabilities for {} digits",
                    p.probs.len(),
                    p.digits.len()
                ),
            );
        }
        if p.probs.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            report.push(Error, format!("pattern `{name}`: probabilities must be positive and finite"));
        }
        let sum: f64 = p.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            report.push(
                Error,
                format!("pattern `{name}`: probability vector does not sum to 1 (sum = {sum})"),
            );
        }
        let in_range = p.digits.iter().all(|&(i, j)| i < p.n && j < p.m);
        if in_range {
            report.occupancy.push(Occupancy {
                pattern: name.clone(),
                rows: p.row_occupancy(),
                cols: p.col_occupancy(),
            });
        }
    }

    if sys.frequencies.len() == sys.patterns.len() {
        if sys.frequency_sum() != BigRational::one() {
            report.push(
                Error,
                format!("frequencies sum to {} instead of 1", sys.frequency_sum()),
            );
        }
        for (p, f) in sys.patterns.iter().zip(&sys.frequencies) {
            if f.is_zero() {
                report.push(
                    Warning,
                    format!("pattern `{}` has frequency 0 and is excluded from the level sequence", p.name),
                );
            }
        }
        let dims_ok = sys.patterns.iter().all(|p| p.n >= 2 && p.m >= 2);
        if dims_ok && sys.frequencies.iter().any(|f| !f.is_zero()) {
            report.zeta = Some(sys.zeta());
        }
    }
    if sys.orientation == Orientation::Transposed {
        report.push(Info, "system is in transposed orientation");
    }
    report.n_plus = Some(sys.n_plus());
    report
}

/// How levels are assigned to patterns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SequenceMode {
    /// Largest-remainder scheduling on the exact frequencies.
    Balanced,
    /// A user-supplied list of pattern names, cycled when too short.
    Explicit { levels: Vec<String> },
}

#[derive(Clone, Debug)]
enum Schedule {
    /// `weights[g] / scale == f_g`.
    Balanced { weights: Vec<i128>, scale: i128 },
    Explicit(Vec<usize>),
}

/// An assignment `k ↦ γ_k` for every level `k ≥ 1`.
#[derive(Clone, Debug)]
pub struct PatternSequence {
    system: PatternSystem,
    schedule: Schedule,
}

/// Build the level sequence for a validated system.
pub fn realize_sequence(sys: &PatternSystem, mode: &SequenceMode) -> Result<PatternSequence> {
    let schedule = match mode {
        SequenceMode::Balanced => {
            let mut scale: i128 = 1;
            for f in &sys.frequencies {
                scale = scale.lcm(&(*f.denom() as i128));
                if scale > i64::MAX as i128 {
                    return Err(Error::Schema("frequency denominators too large to schedule".into()));
                }
            }
            let weights = sys
                .frequencies
                .iter()
                .map(|f| *f.numer() as i128 * (scale / *f.denom() as i128))
                .collect();
            Schedule::Balanced { weights, scale }
        }
        SequenceMode::Explicit { levels } => {
            if levels.is_empty() {
                return Err(Error::Schema("explicit sequence has no levels".into()));
            }
            let idx = levels
                .iter()
                .map(|name| sys.index_of(name).ok_or_else(|| Error::UnknownPattern(name.clone())))
                .collect::<Result<Vec<_>>>()?;
            Schedule::Explicit(idx)
        }
    };
    Ok(PatternSequence {
        system: sys.clone(),
        schedule,
    })
}

impl PatternSequence {
    pub fn balanced(sys: &PatternSystem) -> Result<PatternSequence> {
        realize_sequence(sys, &SequenceMode::Balanced)
    }

    pub fn system(&self) -> &PatternSystem {
        &self.system
    }

    pub fn mode(&self) -> SequenceMode {
        match &self.schedule {
            Schedule::Balanced { .. } => SequenceMode::Balanced,
            Schedule::Explicit(idx) => SequenceMode::Explicit {
                levels: idx.iter().map(|&g| self.system.patterns[g].name.clone()).collect(),
            },
        }
    }

    /// The same level assignment over the transposed system.
    pub fn transposed(&self) -> PatternSequence {
        PatternSequence {
            system: self.system.transpose(),
            schedule: self.schedule.clone(),
        }
    }

    /// Endless iterator of pattern indices for levels 1, 2, ...
    pub fn iter(&self) -> LevelIter<'_> {
        LevelIter {
            seq: self,
            k: 0,
            counts: vec![0; self.system.len()],
        }
    }

    /// Pattern indices of levels `1..=len`.
    pub fn prefix(&self, len: usize) -> Vec<usize> {
        self.iter().take(len).collect()
    }

    /// Pattern index of level `k` (1-based). Balanced mode replays the
    /// scheduler, so bulk access should go through [`Self::prefix`].
    pub fn level_index(&self, k: usize) -> usize {
        assert!(k >= 1, "levels are numbered from 1");
        match &self.schedule {
            Schedule::Explicit(idx) => idx[(k - 1) % idx.len()],
            Schedule::Balanced { .. } => self.iter().nth(k - 1).expect("endless iterator"),
        }
    }

    pub fn level(&self, k: usize) -> &Pattern {
        &self.system.patterns[self.level_index(k)]
    }

    /// True when an explicit list is shorter than `depth` and gets cycled.
    pub fn is_cycled(&self, depth: usize) -> bool {
        matches!(&self.schedule, Schedule::Explicit(idx) if idx.len() < depth)
    }

    /// Diagnostics about the sequence itself, for validation output.
    pub fn notes(&self) -> Vec<Message> {
        let mut out = Vec::new();
        if let Schedule::Explicit(idx) = &self.schedule {
            out.push(Message {
                severity: Severity::Info,
                text: format!(
                    "explicit sequence of {} levels is cycled periodically beyond level {}",
                    idx.len(),
                    idx.len()
                ),
            });
            let n = idx.len();
            for (g, p) in self.system.patterns.iter().enumerate() {
                let count = idx.iter().filter(|&&h| h == g).count() as u64;
                let cycle = Ratio::new(count, n as u64);
                if cycle != self.system.frequencies[g] {
                    out.push(Message {
                        severity: Severity::Warning,
                        text: format!(
                            "pattern `{}` occurs with frequency {} in the explicit cycle but is declared {}",
                            p.name, cycle, self.system.frequencies[g]
                        ),
                    });
                }
            }
        }
        out
    }
}

pub struct LevelIter<'a> {
    seq: &'a PatternSequence,
    k: usize,
    counts: Vec<i128>,
}

impl Iterator for LevelIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        self.k += 1;
        let chosen = match &self.seq.schedule {
            Schedule::Explicit(idx) => idx[(self.k - 1) % idx.len()],
            Schedule::Balanced { weights, scale } => {
                // argmax of f_g * k - count_g, scaled by `scale`; first wins ties.
                let k = self.k as i128;
                let mut best = 0;
                let mut best_val = i128::MIN;
                for (g, (&w, &c)) in weights.iter().zip(&self.counts).enumerate() {
                    let val = w * k - c * scale;
                    if val > best_val {
                        best_val = val;
                        best = g;
                    }
                }
                best
            }
        };
        self.counts[chosen] += 1;
        Some(chosen)
    }
}

/// `count_γ(n) / n` for each pattern, in system order.
pub fn empirical_frequencies(seq: &PatternSequence, n: usize) -> Vec<(String, f64)> {
    assert!(n >= 1);
    let mut counts = vec![0usize; seq.system.len()];
    for g in seq.iter().take(n) {
        counts[g] += 1;
    }
    seq.system
        .patterns
        .iter()
        .zip(counts)
        .map(|(p, c)| (p.name.clone(), c as f64 / n as f64))
        .collect()
}
