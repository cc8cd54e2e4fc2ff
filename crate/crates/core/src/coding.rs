//! Symbolic coding of the carpet.
//!
//! Levels `1, 2, ...` carry patterns from a [`PatternSequence`]. A word picks
//! one digit per level; the `δ`-approximate square of a word at height
//! `1/(m_1⋯m_k)` fixes the column digits `i_1…i_l` and the row digits
//! `j_1…j_k`, where `l = l(k)` is the unique level with
//! `n_1⋯n_l ≥ m_1⋯m_k > n_1⋯n_{l-1}`.
//!
//! The level products are exact big integers, and `l(k)` and `k(δ)` are
//! decided exactly even at ties such as `n = 4, m = 2`.
//! Measures of approximate squares are returned as natural logs.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::patterns::{Digit, Pattern, PatternSequence, PatternSystem};
use crate::spectrum::TiltParams;

/// Default cap on the number of enumerated approximate squares.
pub const DEFAULT_ENUM_CAP: u128 = 10_000_000;

/// Exact level products `M_k = m_1⋯m_k`, `N_l = n_1⋯n_l` and their logs.
#[derive(Clone, Debug)]
pub struct CumulativeScales {
    depth: usize,
    /// Pattern index per level; covers `max(depth, l(depth))` levels.
    levels: Vec<usize>,
    /// `M_0 = 1, …, M_depth`.
    m_products: Vec<BigUint>,
    /// `N_0 = 1, …, N_{l(depth)}`.
    n_products: Vec<BigUint>,
    log_m: Vec<f64>,
    log_n: Vec<f64>,
    /// `l(k)` for `k = 0..=depth`.
    l_table: Vec<usize>,
}

impl CumulativeScales {
    pub fn new(seq: &PatternSequence, depth: usize) -> CumulativeScales {
        assert!(depth >= 1, "depth must be at least 1");
        let sys = seq.system();
        let mut iter = seq.iter();
        let mut levels: Vec<usize> = iter.by_ref().take(depth).collect();

        let mut m_products = vec![BigUint::one()];
        let mut log_m = vec![0.0];
        for &g in &levels {
            let m = sys.patterns[g].m;
            m_products.push(m_products.last().unwrap() * m);
            log_m.push(log_m.last().unwrap() + (m as f64).ln());
        }

        let target = &m_products[depth];
        let mut n_products = vec![BigUint::one()];
        let mut log_n = vec![0.0];
        let mut h = 0;
        while n_products.last().unwrap() < target {
            if h == levels.len() {
                levels.push(iter.next().expect("endless iterator"));
            }
            let n = sys.patterns[levels[h]].n;
            n_products.push(n_products.last().unwrap() * n);
            log_n.push(log_n.last().unwrap() + (n as f64).ln());
            h += 1;
        }

        let mut l_table = vec![0; depth + 1];
        let mut l = 0;
        for k in 1..=depth {
            while n_products[l] < m_products[k] {
                l += 1;
            }
            l_table[k] = l;
        }

        CumulativeScales {
            depth,
            levels,
            m_products,
            n_products,
            log_m,
            log_n,
            l_table,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Pattern indices of the covered levels (level `h` at index `h - 1`).
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// `M_k`, `0 ≤ k ≤ depth`.
    pub fn m_product(&self, k: usize) -> &BigUint {
        &self.m_products[k]
    }

    /// `N_l`, `0 ≤ l ≤ l(depth)`.
    pub fn n_product(&self, l: usize) -> &BigUint {
        &self.n_products[l]
    }

    pub fn m_products(&self) -> &[BigUint] {
        &self.m_products
    }

    pub fn n_products(&self) -> &[BigUint] {
        &self.n_products
    }

    /// `ln M_k`.
    pub fn log_m(&self, k: usize) -> f64 {
        self.log_m[k]
    }

    /// `ln N_l`.
    pub fn log_n(&self, l: usize) -> f64 {
        self.log_n[l]
    }

    /// `l(k)`: the unique `l` with `N_l ≥ M_k > N_{l-1}`.
    pub fn l_of_k(&self, k: usize) -> Result<usize> {
        if k == 0 {
            return Err(Error::Domain("k must be at least 1".into()));
        }
        self.l_table.get(k).copied().ok_or(Error::InsufficientDepth {
            needed: k,
            available: self.depth,
        })
    }

    /// `l(k)` decided on the float log sums alone.
    pub fn l_of_k_float(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.depth {
            return self.l_of_k(k);
        }
        let target = self.log_m[k];
        Ok(self
            .log_n
            .iter()
            .position(|&x| x >= target)
            .unwrap_or(self.log_n.len() - 1))
    }

    /// `k(δ)`: the unique `k` with `1/M_k ≤ δ < 1/M_{k-1}`, or 1 when
    /// `δ ≥ 1`.
    pub fn k_of_delta(&self, delta: f64) -> Result<usize> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta must be positive and finite, got {delta}")));
        }
        if delta >= 1.0 {
            return Ok(1);
        }
        let exact = BigRational::from_float(delta).expect("finite float");
        let numer = exact.numer().magnitude().clone();
        let denom = exact.denom().magnitude().clone();
        // δ·M_k ≥ 1  ⇔  numer·M_k ≥ denom.
        self.m_products
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, m)| &numer * *m >= denom)
            .map(|(k, _)| k)
            .ok_or(Error::InsufficientDepth {
                needed: self.depth + 1,
                available: self.depth,
            })
    }
}

/// Per-pattern lookup tables for the base measure.
#[derive(Clone, Debug)]
struct Tables {
    n: usize,
    log_p: Vec<f64>,
    row_of: Vec<u32>,
    col_of: Vec<u32>,
    log_q_row: Vec<f64>,
    log_q_col: Vec<f64>,
    /// `cell[j * n + i]` is the digit index of `(i, j)`.
    cell: Vec<Option<usize>>,
    rows: Vec<u32>,
    cols: Vec<u32>,
    probs: Vec<f64>,
}

impl Tables {
    fn new(p: &Pattern) -> Tables {
        let (n, m) = (p.n as usize, p.m as usize);
        let mut cell = vec![None; n * m];
        for (d, &(i, j)) in p.digits.iter().enumerate() {
            cell[j as usize * n + i as usize] = Some(d);
        }
        Tables {
            n,
            log_p: p.probs.iter().map(|x| x.ln()).collect(),
            row_of: p.digits.iter().map(|d| d.1).collect(),
            col_of: p.digits.iter().map(|d| d.0).collect(),
            log_q_row: p.row_marginal().iter().map(|x| x.ln()).collect(),
            log_q_col: p.col_marginal().iter().map(|x| x.ln()).collect(),
            cell,
            rows: p.occupied_rows(),
            cols: p.occupied_cols(),
            probs: p.probs.clone(),
        }
    }

    fn digit(&self, i: u32, j: u32) -> Option<usize> {
        if i as usize >= self.n {
            return None;
        }
        self.cell.get(j as usize * self.n + i as usize).copied().flatten()
    }
}

/// Log weights on digits, rows and columns of each pattern. Implemented by
/// the base measure and by [`TiltParams`].
pub trait LevelWeights {
    fn log_digit(&self, g: usize, digit: usize) -> f64;
    fn log_row(&self, g: usize, j: u32) -> f64;
    fn log_col(&self, g: usize, i: u32) -> f64;
}

/// The base measure `μ`: weights `p`, `q`, `q̂`.
pub struct BaseWeights<'a>(&'a [Tables]);

impl LevelWeights for BaseWeights<'_> {
    fn log_digit(&self, g: usize, digit: usize) -> f64 {
        self.0[g].log_p[digit]
    }
    fn log_row(&self, g: usize, j: u32) -> f64 {
        self.0[g].log_q_row.get(j as usize).copied().unwrap_or(f64::NEG_INFINITY)
    }
    fn log_col(&self, g: usize, i: u32) -> f64 {
        self.0[g].log_q_col.get(i as usize).copied().unwrap_or(f64::NEG_INFINITY)
    }
}

impl LevelWeights for TiltParams {
    fn log_digit(&self, g: usize, digit: usize) -> f64 {
        self.log_weights[g][digit]
    }
    fn log_row(&self, g: usize, j: u32) -> f64 {
        self.log_row_sums[g].get(j as usize).copied().unwrap_or(f64::NEG_INFINITY)
    }
    fn log_col(&self, g: usize, i: u32) -> f64 {
        self.log_col_sums[g].get(i as usize).copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// A finite word: one digit index per level, `letters[h - 1]` indexing the
/// digits of the level-`h` pattern.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    pub letters: Vec<usize>,
}

impl Word {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// The address `(i_1…i_l ; j_1…j_k)` of an approximate square.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApproxSquareAddress {
    pub k: usize,
    pub l: usize,
    pub i_part: Vec<u32>,
    pub j_part: Vec<u32>,
}

/// Exact rectangle `[x0, x0 + width] × [y0, y0 + height]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    pub x0: BigRational,
    pub y0: BigRational,
    pub width: BigRational,
    pub height: BigRational,
}

/// Which product measure to sample words from.
#[derive(Clone, Copy)]
pub enum SampleWeights<'a> {
    Base,
    Tilt(&'a TiltParams),
}

/// A level sequence materialized to a depth, with lookup tables.
#[derive(Clone, Debug)]
pub struct Coding {
    seq: PatternSequence,
    scales: CumulativeScales,
    tables: Vec<Tables>,
}

impl Coding {
    pub fn new(seq: PatternSequence, depth: usize) -> Coding {
        let scales = CumulativeScales::new(&seq, depth);
        let tables = seq.system().patterns.iter().map(Tables::new).collect();
        Coding { seq, scales, tables }
    }

    pub fn sequence(&self) -> &PatternSequence {
        &self.seq
    }

    pub fn system(&self) -> &PatternSystem {
        self.seq.system()
    }

    pub fn scales(&self) -> &CumulativeScales {
        &self.scales
    }

    pub fn depth(&self) -> usize {
        self.scales.depth
    }

    pub fn l_of_k(&self, k: usize) -> Result<usize> {
        self.scales.l_of_k(k)
    }

    /// Number of levels a word must cover to address squares up to `k`.
    pub fn word_len_for(&self, k: usize) -> Result<usize> {
        Ok(k.max(self.l_of_k(k)?))
    }

    pub fn base(&self) -> BaseWeights<'_> {
        BaseWeights(&self.tables)
    }

    fn pattern_at(&self, h: usize) -> Result<usize> {
        self.scales.levels.get(h - 1).copied().ok_or(Error::InsufficientDepth {
            needed: h,
            available: self.scales.levels.len(),
        })
    }

    fn check_tilt(&self, tilt: &TiltParams) -> Result<()> {
        let orientation = self.system().orientation;
        if tilt.orientation != orientation || tilt.log_weights.len() != self.tables.len() {
            return Err(Error::OrientationMismatch {
                tilt: tilt.orientation.to_string(),
                coding: orientation.to_string(),
            });
        }
        Ok(())
    }

    /// Build a word from explicit digits, checking membership level by level.
    pub fn word_from_digits(&self, digits: &[Digit]) -> Result<Word> {
        let letters = digits
            .iter()
            .enumerate()
            .map(|(h, &(i, j))| {
                let g = self.pattern_at(h + 1)?;
                self.tables[g].digit(i, j).ok_or_else(|| {
                    Error::AddressMismatch(format!("digit ({i}, {j}) not in pattern at level {}", h + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word { letters })
    }

    pub fn digits(&self, word: &Word) -> Vec<Digit> {
        word.letters
            .iter()
            .enumerate()
            .map(|(h, &d)| {
                let t = &self.tables[self.scales.levels[h]];
                (t.col_of[d], t.row_of[d])
            })
            .collect()
    }

    /// The approximate square of height `1/M_k` containing the word.
    pub fn address(&self, word: &Word, k: usize) -> Result<ApproxSquareAddress> {
        let l = self.l_of_k(k)?;
        let needed = k.max(l);
        if word.len() < needed {
            return Err(Error::WordTooShort {
                needed,
                len: word.len(),
            });
        }
        let digits = self.digits(&Word {
            letters: word.letters[..needed].to_vec(),
        });
        Ok(ApproxSquareAddress {
            k,
            l,
            i_part: digits[..l].iter().map(|d| d.0).collect(),
            j_part: digits[..k].iter().map(|d| d.1).collect(),
        })
    }

    fn check_address(&self, a: &ApproxSquareAddress) -> Result<()> {
        let l = self.l_of_k(a.k)?;
        if l != a.l || a.i_part.len() != a.l || a.j_part.len() != a.k {
            return Err(Error::AddressMismatch(format!(
                "address has k = {}, l = {}, parts of length {} and {}; sequence has l(k) = {l}",
                a.k,
                a.l,
                a.i_part.len(),
                a.j_part.len()
            )));
        }
        Ok(())
    }

    /// `ln` of the measure of an approximate square under any level weights.
    pub fn log_measure<W: LevelWeights + ?Sized>(&self, a: &ApproxSquareAddress, weights: &W) -> Result<f64> {
        self.check_address(a)?;
        let full = a.k.min(a.l);
        let mut total = 0.0;
        for h in 1..=a.k.max(a.l) {
            let g = self.pattern_at(h)?;
            let term = if h <= full {
                let (i, j) = (a.i_part[h - 1], a.j_part[h - 1]);
                let d = self.tables[g].digit(i, j).ok_or_else(|| {
                    Error::AddressMismatch(format!("digit ({i}, {j}) not in pattern at level {h}"))
                })?;
                weights.log_digit(g, d)
            } else if h <= a.k {
                weights.log_row(g, a.j_part[h - 1])
            } else {
                weights.log_col(g, a.i_part[h - 1])
            };
            if term == f64::NEG_INFINITY {
                return Err(Error::AddressMismatch(format!("unoccupied row or column at level {h}")));
            }
            total += term;
        }
        Ok(total)
    }

    /// `ln μ(S)`.
    pub fn log_mu_square(&self, a: &ApproxSquareAddress) -> Result<f64> {
        self.log_measure(a, &self.base())
    }

    /// `ln μ_t(S)`.
    pub fn log_mu_t_square(&self, a: &ApproxSquareAddress, tilt: &TiltParams) -> Result<f64> {
        self.check_tilt(tilt)?;
        self.log_measure(a, tilt)
    }

    /// `ln` measure of `S_k(word)` read directly off the word's letters.
    pub fn log_measure_of_word<W: LevelWeights + ?Sized>(&self, word: &Word, k: usize, weights: &W) -> Result<f64> {
        let l = self.l_of_k(k)?;
        let needed = k.max(l);
        if word.len() < needed {
            return Err(Error::WordTooShort {
                needed,
                len: word.len(),
            });
        }
        let full = k.min(l);
        let mut total = 0.0;
        for (h, &d) in word.letters[..needed].iter().enumerate() {
            let g = self.scales.levels[h];
            let t = &self.tables[g];
            total += if h < full {
                weights.log_digit(g, d)
            } else if h < k {
                weights.log_row(g, t.row_of[d])
            } else {
                weights.log_col(g, t.col_of[d])
            };
        }
        Ok(total)
    }

    /// Number of depth-`k` approximate squares.
    pub fn square_count(&self, k: usize) -> Result<u128> {
        let l = self.l_of_k(k)?;
        let mut count: u128 = 1;
        for h in 1..=k.max(l) {
            let t = &self.tables[self.pattern_at(h)?];
            let choices = if h <= k.min(l) {
                t.log_p.len()
            } else if h <= k {
                t.rows.len()
            } else {
                t.cols.len()
            };
            count = count.saturating_mul(choices as u128);
        }
        Ok(count)
    }

    /// Every depth-`k` approximate square exactly once.
    pub fn enumerate_squares(&self, k: usize, cap: u128) -> Result<SquareIter<'_>> {
        let count = self.square_count(k)?;
        if count > cap {
            return Err(Error::EnumerationCap { count, cap });
        }
        let l = self.l_of_k(k)?;
        let choices = (1..=k.max(l))
            .map(|h| {
                let t = &self.tables[self.scales.levels[h - 1]];
                if h <= k.min(l) {
                    t.log_p.len()
                } else if h <= k {
                    t.rows.len()
                } else {
                    t.cols.len()
                }
            })
            .collect();
        Ok(SquareIter {
            coding: self,
            k,
            l,
            counters: vec![0; k.max(l)],
            choices,
            done: false,
        })
    }

    /// Exact rectangle of an approximate square.
    pub fn rectangle(&self, a: &ApproxSquareAddress) -> Result<Rect> {
        self.check_address(a)?;
        let (x, y) = self.cell(a)?;
        let width = BigRational::new(BigUint::one().into(), self.scales.n_products[a.l].clone().into());
        let height = BigRational::new(BigUint::one().into(), self.scales.m_products[a.k].clone().into());
        Ok(Rect {
            x0: BigRational::from_integer(x.into()) * &width,
            y0: BigRational::from_integer(y.into()) * &height,
            width,
            height,
        })
    }

    /// Integer cell `(x, y)` of the square in the `N_l × M_k` grid.
    pub fn cell(&self, a: &ApproxSquareAddress) -> Result<(BigUint, BigUint)> {
        let sys = self.system();
        let mut x = BigUint::zero();
        for (h, &i) in a.i_part.iter().enumerate() {
            x = x * sys.patterns[self.pattern_at(h + 1)?].n + i;
        }
        let mut y = BigUint::zero();
        for (h, &j) in a.j_part.iter().enumerate() {
            y = y * sys.patterns[self.pattern_at(h + 1)?].m + j;
        }
        Ok((x, y))
    }

    /// Cumulative distributions for sampling words.
    pub fn sampler(&self, weights: SampleWeights<'_>) -> Result<Sampler<'_>> {
        let cdfs = match weights {
            SampleWeights::Base => self.tables.iter().map(|t| cdf(&t.probs)).collect(),
            SampleWeights::Tilt(tilt) => {
                self.check_tilt(tilt)?;
                (0..self.tables.len()).map(|g| cdf(&tilt.weights(g))).collect()
            }
        };
        Ok(Sampler { coding: self, cdfs })
    }

    /// One word of the given depth, stream 0 of `seed`.
    pub fn sample_word(&self, weights: SampleWeights<'_>, depth: usize, seed: u64) -> Result<Word> {
        self.sampler(weights)?.sample(depth, seed, 0)
    }

    /// `ln u_γ(j)` per pattern and row at parameter `t`.
    pub fn log_u_table(&self, t: f64) -> Vec<Vec<f64>> {
        self.tables
            .iter()
            .map(|tab| {
                let mut rows: Vec<Vec<f64>> = vec![Vec::new(); tab.log_q_row.len()];
                for (&lp, &j) in tab.log_p.iter().zip(&tab.row_of) {
                    rows[j as usize].push(t * lp);
                }
                rows.iter()
                    .zip(&tab.log_q_row)
                    .map(|(r, &lq)| {
                        if r.is_empty() {
                            f64::NEG_INFINITY
                        } else {
                            t * lq - log_sum_exp(r.iter().copied())
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Running sums `Σ_{h≤k} ln u_h(j_h)` for `k = 0..=len`.
    pub fn log_u_prefix(&self, word: &Word, log_u: &[Vec<f64>]) -> Vec<f64> {
        let mut out = Vec::with_capacity(word.len() + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for (h, &d) in word.letters.iter().enumerate() {
            let g = self.scales.levels[h];
            acc += log_u[g][self.tables[g].row_of[d] as usize];
            out.push(acc);
        }
        out
    }

    /// `(I_k, D_k)` with `I_k = (1/k) Σ_{h≤k} ln u_h(j_h)` and
    /// `D_k = I_{l(k)} - I_k`.
    pub fn profile(&self, word: &Word, k: usize, t: f64) -> Result<(f64, f64)> {
        let l = self.l_of_k(k)?;
        let needed = k.max(l);
        if word.len() < needed {
            return Err(Error::WordTooShort {
                needed,
                len: word.len(),
            });
        }
        let table = self.log_u_table(t);
        let prefix = self.log_u_prefix(
            &Word {
                letters: word.letters[..needed].to_vec(),
            },
            &table,
        );
        let i_k = prefix[k] / k as f64;
        let i_l = prefix[l] / l as f64;
        Ok((i_k, i_l - i_k))
    }
}

fn cdf(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Reproducible word sampler.
///
/// Word `index` under `seed` uses the ChaCha8 stream `index` of key `seed`
/// and consumes one `u64` per level, so level `h` always reads the same
/// keystream position.
pub struct Sampler<'a> {
    coding: &'a Coding,
    cdfs: Vec<Vec<f64>>,
}

impl Sampler<'_> {
    pub fn sample(&self, depth: usize, seed: u64, index: u64) -> Result<Word> {
        let levels = &self.coding.scales.levels;
        if depth > levels.len() {
            return Err(Error::InsufficientDepth {
                needed: depth,
                available: levels.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let letters = levels[..depth]
            .iter()
            .map(|&g| {
                let u: f64 = rng.gen();
                let cdf = &self.cdfs[g];
                cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
            })
            .collect();
        Ok(Word { letters })
    }
}

/// Odometer over the choices at each level; last level varies fastest.
pub struct SquareIter<'a> {
    coding: &'a Coding,
    k: usize,
    l: usize,
    counters: Vec<usize>,
    choices: Vec<usize>,
    done: bool,
}

impl Iterator for SquareIter<'_> {
    type Item = ApproxSquareAddress;

    fn next(&mut self) -> Option<ApproxSquareAddress> {
        if self.done {
            return None;
        }
        let (k, l) = (self.k, self.l);
        let full = k.min(l);
        let mut i_part = Vec::with_capacity(l);
        let mut j_part = Vec::with_capacity(k);
        for (h, &c) in self.counters.iter().enumerate() {
            let t = &self.coding.tables[self.coding.scales.levels[h]];
            if h < full {
                i_part.push(t.col_of[c]);
                j_part.push(t.row_of[c]);
            } else if h < k {
                j_part.push(t.rows[c]);
            } else {
                i_part.push(t.cols[c]);
            }
        }
        let mut pos = self.counters.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.counters[pos] += 1;
            if self.counters[pos] < self.choices[pos] {
                break;
            }
            self.counters[pos] = 0;
        }
        Some(ApproxSquareAddress { k, l, i_part, j_part })
    }
}

/// Lossy conversion of an exact rational, for diagnostics.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
